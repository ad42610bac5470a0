"""Deterministic per-item generators derived from a single run seed.

Sub-seeds mix the run seed with stable item keys (utterance ids, indices)
so results do not depend on processing order or worker scheduling.
"""
from __future__ import annotations

import zlib

import numpy as np


def derive_rng(seed: int, *keys) -> np.random.Generator:
    entropy = [int(seed)]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode()))
        else:
            entropy.append(int(key))
    return np.random.default_rng(entropy)
