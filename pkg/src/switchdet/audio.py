"""Mono audio buffers and WAV file I/O.

Only mono PCM-16 and float-32 WAV files are accepted. Samples are kept
as float64 in [-1, 1] regardless of the on-disk encoding.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import RateMismatch, UnsupportedFormat


@dataclass
class AudioBuffer:
    samples: np.ndarray
    rate: int
    id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise UnsupportedFormat("buffer must be non-empty and mono")
        if not np.all(np.isfinite(self.samples)):
            raise UnsupportedFormat("buffer contains non-finite samples")
        if self.rate <= 0:
            raise UnsupportedFormat("sample rate must be positive")

    @property
    def duration_sec(self) -> float:
        return self.samples.size / self.rate

    def slice_samples(self, start: int, stop: int, id: str = "") -> "AudioBuffer":
        return AudioBuffer(self.samples[start:stop].copy(), self.rate, id or self.id)


def read_wav(path, expected_rate: int | None = None) -> AudioBuffer:
    """Read a mono WAV file into a normalized AudioBuffer.

    PCM-16 samples are scaled by 1/32768. Float-32 files are taken as-is
    and rescaled only if they exceed [-1, 1].
    """
    path = Path(path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rate, data = wavfile.read(str(path))
    if data.ndim != 1:
        raise UnsupportedFormat(f"{path}: expected mono, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
        peak = np.max(np.abs(samples)) if samples.size else 0.0
        if peak > 1.0:
            samples = samples / peak
    else:
        raise UnsupportedFormat(f"{path}: unsupported sample format {data.dtype}")
    if expected_rate is not None and rate != expected_rate:
        raise RateMismatch(f"{path}: rate {rate} != expected {expected_rate}")
    return AudioBuffer(samples, int(rate), id=path.stem)


def write_wav(path, buf: AudioBuffer) -> None:
    """Write an AudioBuffer as mono PCM-16.

    Quantization matches the read-side 1/32768 scaling so a round trip
    moves no sample by more than 2**-15."""
    pcm = np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(str(path), buf.rate, pcm)
