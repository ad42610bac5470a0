"""Shared synthetic-signal helpers for the test suite."""
import numpy as np
import pytest

from switchdet.audio import AudioBuffer
from switchdet.features import FeatureMatrix


def tone(freq: float, dur: float, rate: int = 16000, amp: float = 0.3,
         utt_id: str = "tone") -> AudioBuffer:
    t = np.arange(int(dur * rate)) / rate
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), rate, id=utt_id)


def ar_noise(coef: float, dur: float, seed: int, rate: int = 16000,
             amp: float = 0.3, pad_sec: float = 0.1,
             utt_id: str = "ar") -> AudioBuffer:
    """First-order autoregressive noise with silent padding at both ends."""
    rng = np.random.default_rng(seed)
    n = int(dur * rate)
    x = np.zeros(n)
    e = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = coef * x[i - 1] + e[i]
    x = x / (np.abs(x).max() + 1e-12) * amp
    pad = np.zeros(int(pad_sec * rate))
    return AudioBuffer(np.concatenate([pad, x, pad]), rate, id=utt_id)


def feature_stream(segment_means, segment_lens, dim: int = 13,
                   sigma: float = 1.0, seed: int = 0,
                   hop_sec: float = 1.0) -> FeatureMatrix:
    """Gaussian feature rows with per-segment mean offsets.

    hop_sec defaults to one second so frame index and nominal time
    coincide, which keeps collar arithmetic transparent in tests.
    """
    rng = np.random.default_rng(seed)
    blocks = []
    for mean, n in zip(segment_means, segment_lens):
        blocks.append(mean + sigma * rng.standard_normal((n, dim)))
    rows = np.vstack(blocks)
    times = np.arange(rows.shape[0], dtype=float) * hop_sec
    return FeatureMatrix(rows=rows, frame_len_sec=hop_sec, hop_sec=hop_sec,
                         frame_start_times=times, feature_kind="test")


def two_class_embeddings(n_per_class: int = 40, dim: int = 8, gap: float = 4.0,
                         n_classes: int = 2, seed: int = 0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim)) * gap
    vecs, labels = [], []
    for c in range(n_classes):
        vecs.append(centers[c] + rng.standard_normal((n_per_class, dim)))
        labels += [f"class{c}"] * n_per_class
    return np.vstack(vecs), np.array(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
