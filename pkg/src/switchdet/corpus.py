"""Synthetic code-switched corpus construction and stimulus masking.

Utterances are stitched from monolingual pools with alternating labels and
a short linear crossfade at each joint; the annotation records the exact
joint positions. Masking attenuates audio away from a change point with a
per-side Gaussian so a chosen number of voiced frames survives.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import (EmptyPool, FormatError, InsufficientVoicedFrames,
                     RateMismatch)
from .features import _frame_geometry
from .vad import DEFAULT_RATIO, endpoint_trim, energy_vad

CROSSFADE_SEC = 0.01


@dataclass
class Annotation:
    utt_id: str
    segments: list  # of (start_sec, end_sec, label), contiguous, sorted

    @property
    def change_points(self) -> list[float]:
        return [seg[0] for seg in self.segments[1:]]

    @property
    def duration_sec(self) -> float:
        return self.segments[-1][1] if self.segments else 0.0

    def label_at(self, t: float) -> str:
        for start, end, label in self.segments:
            if start <= t < end:
                return label
        return self.segments[-1][2]


def stitch_code_switched(pools: dict, n_changes: int, seed: int,
                         utt_id: str = "", crossfade_sec: float = CROSSFADE_SEC,
                         vad_ratio: float = DEFAULT_RATIO) -> tuple[AudioBuffer, Annotation]:
    """Stitch n_changes+1 endpoint-trimmed segments with alternating labels.

    Segments are drawn with replacement from two pools keyed by label; the
    first pool's label starts. Joints use a symmetric linear crossfade and
    each annotated change point sits at the crossfade midpoint.
    """
    if len(pools) != 2:
        raise ValueError(f"need exactly two labelled pools, got {len(pools)}")
    if not 1 <= n_changes <= 5:
        raise ValueError(f"n_changes must be in 1..5, got {n_changes}")
    labels = list(pools.keys())
    for lab in labels:
        if not pools[lab]:
            raise EmptyPool(f"pool {lab!r} is empty")
    rates = {buf.rate for pool in pools.values() for buf in pool}
    if len(rates) != 1:
        raise RateMismatch(f"pools mix sample rates {sorted(rates)}")
    rate = rates.pop()

    rng = np.random.default_rng(seed)
    seg_labels = [labels[k % 2] for k in range(n_changes + 1)]
    pieces = []
    for lab in seg_labels:
        pool = pools[lab]
        pieces.append(endpoint_trim(pool[int(rng.integers(len(pool)))], vad_ratio))

    xf_nominal = int(round(crossfade_sec * rate))
    out = pieces[0].samples.copy()
    boundaries = []
    for piece in pieces[1:]:
        nxt = piece.samples
        xf = min(xf_nominal, out.size, nxt.size)
        if xf > 0:
            fade_in = (np.arange(xf) + 0.5) / xf
            mixed = out[-xf:] * (1.0 - fade_in) + nxt[:xf] * fade_in
            boundaries.append(out.size - 0.5 * xf)
            out = np.concatenate([out[:-xf], mixed, nxt[xf:]])
        else:
            boundaries.append(float(out.size))
            out = np.concatenate([out, nxt])

    buf = AudioBuffer(out, rate, id=utt_id)
    times = [b / rate for b in boundaries]
    edges = [0.0] + times + [buf.duration_sec]
    segments = [(edges[k], edges[k + 1], seg_labels[k]) for k in range(len(seg_labels))]
    return buf, Annotation(utt_id, segments)


def gaussian_mask(buf: AudioBuffer, change_sample: int, n_voiced_frames: int,
                  vad_ratio: float = DEFAULT_RATIO) -> np.ndarray:
    """Per-sample attenuation, 1.0 at the change sample, falling to 0.5 at
    the boundary of the n-th voiced frame on each side.

    Sides get separate Gaussian widths. Frames straddling the change sample
    count for neither side.
    """
    if not 0 <= change_sample < buf.samples.size:
        raise ValueError(f"change sample {change_sample} outside buffer")
    if n_voiced_frames < 1:
        raise ValueError("n_voiced_frames must be positive")
    vad = energy_vad(buf, vad_ratio)
    frame_len, hop = _frame_geometry(buf.rate)
    starts = vad.voiced_index_map * hop
    ends = starts + frame_len
    left = starts[ends <= change_sample]
    right = starts[starts >= change_sample]
    if left.size < n_voiced_frames or right.size < n_voiced_frames:
        raise InsufficientVoicedFrames(
            f"need {n_voiced_frames} voiced frames per side, have "
            f"{left.size} left and {right.size} right")
    left_bound = left[-n_voiced_frames]
    right_bound = right[n_voiced_frames - 1] + frame_len
    half_width = np.sqrt(2.0 * np.log(2.0))
    sigma_l = (change_sample - left_bound) / half_width
    sigma_r = (right_bound - change_sample) / half_width
    n = np.arange(buf.samples.size, dtype=np.float64)
    d = n - change_sample
    sigma = np.where(d < 0, sigma_l, sigma_r)
    return np.exp(-0.5 * (d / sigma) ** 2)


def apply_gaussian_mask(buf: AudioBuffer, change_sample: int, n_voiced_frames: int,
                        vad_ratio: float = DEFAULT_RATIO) -> AudioBuffer:
    """Mask the buffer around the change point, then endpoint-trim."""
    mask = gaussian_mask(buf, change_sample, n_voiced_frames, vad_ratio)
    masked = AudioBuffer(buf.samples * mask, buf.rate, id=buf.id)
    return endpoint_trim(masked, vad_ratio)


def save_annotations(path, annotations: list[Annotation]) -> None:
    """Rows: utt_id, start_sec, end_sec, label; tab separated, 6 decimal
    times, sorted by utterance then start."""
    rows = []
    for ann in sorted(annotations, key=lambda a: a.utt_id):
        for start, end, label in sorted(ann.segments):
            rows.append(f"{ann.utt_id}\t{start:.6f}\t{end:.6f}\t{label}")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(rows) + "\n")
    os.replace(tmp, path)


def load_annotations(path) -> dict:
    by_utt: dict[str, list] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"{path}: bad annotation row {line!r}")
        try:
            start, end = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: bad annotation row {line!r}") from exc
        if end <= start:
            raise FormatError(f"{path}: empty segment in row {line!r}")
        by_utt.setdefault(parts[0], []).append((start, end, parts[3]))
    out = {}
    for utt_id, segs in by_utt.items():
        segs.sort()
        out[utt_id] = Annotation(utt_id, segs)
    return out


def save_manifest(path, rows: list[tuple]) -> None:
    """Rows of utt_id and wav path, optionally a third label column."""
    lines = ["\t".join(str(v) for v in row) for row in rows]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_manifest(path) -> list[tuple]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise FormatError(f"{path}: bad manifest row {line!r}")
        rows.append(tuple(parts))
    if not rows:
        raise FormatError(f"{path}: empty manifest")
    return rows
