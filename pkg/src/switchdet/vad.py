"""Energy-based voice activity detection.

A frame is voiced when its mean squared energy exceeds a fixed fraction
(default 6%) of the utterance-average frame energy.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import AllUnvoiced, FormatError, LengthMismatch
from .features import FeatureMatrix, _frame_geometry, frame_signal

DEFAULT_RATIO = 0.06


@dataclass
class VadResult:
    voiced_mask: np.ndarray  # (T,) bool
    voiced_index_map: np.ndarray  # voiced position -> original frame index
    threshold_used: float
    frame_energies: np.ndarray


def frame_energies(buf: AudioBuffer) -> np.ndarray:
    """Mean squared sample energy per 20 ms frame at 10 ms hop."""
    frame_len, hop = _frame_geometry(buf.rate)
    frames = frame_signal(buf.samples, frame_len, hop)
    return np.mean(frames * frames, axis=1)


def energy_vad(buf: AudioBuffer, ratio: float = DEFAULT_RATIO) -> VadResult:
    """Mark frames voiced when energy exceeds ratio * mean frame energy."""
    energies = frame_energies(buf)
    threshold = ratio * float(np.mean(energies))
    mask = energies > threshold
    if not mask.any():
        raise AllUnvoiced("no frame exceeds the energy threshold")
    return VadResult(mask, np.flatnonzero(mask), threshold, energies)


def select_voiced(fm: FeatureMatrix, vad: VadResult) -> FeatureMatrix:
    """Keep only voiced rows; timing arrays follow so detections can be
    mapped back to original frames and seconds."""
    if vad.voiced_mask.size != fm.n_frames:
        raise LengthMismatch(
            f"mask has {vad.voiced_mask.size} frames, features have {fm.n_frames}")
    keep = vad.voiced_index_map
    return FeatureMatrix(fm.rows[keep], fm.frame_len_sec, fm.hop_sec,
                         fm.frame_start_times[keep], fm.feature_kind,
                         voiced_mask=np.ones(keep.size, dtype=bool),
                         voiced_index_map=keep.copy())


def select_voiced_from_mask(fm: FeatureMatrix) -> FeatureMatrix:
    """Like select_voiced but using the mask stored on the matrix itself."""
    if fm.voiced_mask is None:
        raise LengthMismatch("feature matrix carries no voiced mask")
    if fm.voiced_mask.size != fm.n_frames:
        raise LengthMismatch("stored mask length does not match frame count")
    if not fm.voiced_mask.any():
        raise AllUnvoiced("stored mask has no voiced frames")
    keep = np.flatnonzero(fm.voiced_mask)
    return FeatureMatrix(fm.rows[keep], fm.frame_len_sec, fm.hop_sec,
                         fm.frame_start_times[keep], fm.feature_kind,
                         voiced_mask=np.ones(keep.size, dtype=bool),
                         voiced_index_map=keep)


def endpoint_trim(buf: AudioBuffer, ratio: float = DEFAULT_RATIO) -> AudioBuffer:
    """Cut leading and trailing unvoiced audio. Interior frames are kept.

    Returns the buffer unchanged when VAD marks nothing voiced."""
    try:
        vad = energy_vad(buf, ratio)
    except AllUnvoiced:
        return buf
    frame_len, hop = _frame_geometry(buf.rate)
    first = int(vad.voiced_index_map[0])
    last = int(vad.voiced_index_map[-1])
    start = first * hop
    stop = min(last * hop + frame_len, buf.samples.size)
    return buf.slice_samples(start, stop, buf.id)


def save_vad(path, vad: VadResult) -> None:
    """Text dump: frame_idx, energy, voiced flag, tab separated."""
    lines = [f"{i}\t{vad.frame_energies[i]:.17g}\t{int(vad.voiced_mask[i])}"
             for i in range(vad.voiced_mask.size)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_vad(path) -> VadResult:
    energies, flags = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{path}: bad VAD row {line!r}")
        energies.append(float(parts[1]))
        flags.append(parts[2] == "1")
    mask = np.asarray(flags, dtype=bool)
    energies = np.asarray(energies)
    ratio_thresh = DEFAULT_RATIO * float(np.mean(energies)) if energies.size else 0.0
    return VadResult(mask, np.flatnonzero(mask), ratio_thresh, energies)
