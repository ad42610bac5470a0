"""Frame-level front end: MFCC, delta stacking, LPCC, and shifted delta cepstra.

All extractors share a 20 ms / 10 ms framing grid. Feature matrices carry
their frame timing so detections can be mapped back to seconds after
unvoiced frames have been dropped.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio import AudioBuffer
from .errors import FormatError, TooShort

FRAME_LEN_SEC = 0.02
HOP_SEC = 0.01
LOG_FLOOR = 1e-10


@dataclass
class FeatureMatrix:
    rows: np.ndarray  # (T, D) float64
    frame_len_sec: float
    hop_sec: float
    frame_start_times: np.ndarray  # (T,) seconds
    feature_kind: str
    voiced_mask: np.ndarray | None = None
    voiced_index_map: np.ndarray | None = None  # voiced row -> original frame index
    degenerate_mask: np.ndarray | None = None

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def frame_center_time(self, frame_idx: int) -> float:
        return float(self.frame_start_times[frame_idx] + 0.5 * self.frame_len_sec)


def frame_signal(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Slice a signal into overlapping frames, dropping the tail remainder."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < frame_len:
        raise TooShort(f"signal of {samples.size} samples < frame length {frame_len}")
    n_frames = 1 + (samples.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def _frame_geometry(rate: int) -> tuple[int, int]:
    return int(round(FRAME_LEN_SEC * rate)), int(round(HOP_SEC * rate))


def _start_times(n_frames: int) -> np.ndarray:
    return np.arange(n_frames, dtype=np.float64) * HOP_SEC


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    """Triangular filters on the mel scale spanning 0 to Nyquist."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.arange(n_fft // 2 + 1) * rate / n_fft
    fb = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        left, center, right = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_freqs - left) / max(center - left, 1e-12)
        down = (right - bin_freqs) / max(right - center, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def preemphasize(samples: np.ndarray, coeff: float = 0.97) -> np.ndarray:
    out = samples.astype(np.float64).copy()
    out[1:] -= coeff * samples[:-1]
    return out


def mfcc(buf: AudioBuffer, n_coeffs: int = 13, n_mels: int = 26,
         preemph: float = 0.97) -> FeatureMatrix:
    """Mel-frequency cepstral coefficients including the energy-like c0."""
    frame_len, hop = _frame_geometry(buf.rate)
    frames = frame_signal(preemphasize(buf.samples, preemph), frame_len, hop)
    windowed = frames * np.hamming(frame_len)
    n_fft = _next_pow2(frame_len)
    mag = np.abs(np.fft.rfft(windowed, n=n_fft, axis=1))
    fb = mel_filterbank(n_mels, n_fft, buf.rate)
    energies = mag @ fb.T
    log_e = np.log(np.maximum(energies, LOG_FLOOR))
    coeffs = dct(log_e, type=2, norm="ortho", axis=1)[:, :n_coeffs]
    return FeatureMatrix(coeffs, FRAME_LEN_SEC, HOP_SEC,
                         _start_times(coeffs.shape[0]), f"mfcc{n_coeffs}")


def _delta(rows: np.ndarray, reach: int = 2) -> np.ndarray:
    # regression over +-reach frames with edge replication
    padded = np.pad(rows, ((reach, reach), (0, 0)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, reach + 1))
    out = np.zeros_like(rows)
    for k in range(1, reach + 1):
        out += k * (padded[reach + k:padded.shape[0] - reach + k]
                    - padded[reach - k:padded.shape[0] - reach - k])
    return out / denom


def append_deltas(fm: FeatureMatrix) -> FeatureMatrix:
    """Stack first and second order delta coefficients onto the base features."""
    d1 = _delta(fm.rows)
    d2 = _delta(d1)
    rows = np.hstack([fm.rows, d1, d2])
    return FeatureMatrix(rows, fm.frame_len_sec, fm.hop_sec,
                         fm.frame_start_times.copy(), fm.feature_kind + "+deltas",
                         voiced_mask=None if fm.voiced_mask is None else fm.voiced_mask.copy(),
                         degenerate_mask=fm.degenerate_mask)


def _autocorr(windowed: np.ndarray, order: int) -> np.ndarray:
    T, L = windowed.shape
    r = np.empty((T, order + 1))
    for k in range(order + 1):
        r[:, k] = np.sum(windowed[:, :L - k] * windowed[:, k:], axis=1)
    return r


def _levinson(r: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Batch Levinson-Durbin. Returns polynomial coefficients a[1..p] and
    final prediction error energy. Convention: A(z) = 1 + sum a_k z^-k."""
    T = r.shape[0]
    a = np.zeros((T, order + 1))
    a[:, 0] = 1.0
    err = r[:, 0].copy()
    for m in range(1, order + 1):
        acc = r[:, m].copy()
        for j in range(1, m):
            acc += a[:, j] * r[:, m - j]
        k = -acc / np.maximum(err, 1e-20)
        prev = a[:, 1:m].copy()
        a[:, 1:m] = prev + k[:, None] * prev[:, ::-1]
        a[:, m] = k
        err = err * (1.0 - k * k)
    return a, err


def lpcc(buf: AudioBuffer, order: int = 12, n_coeffs: int = 13) -> FeatureMatrix:
    """Linear prediction cepstral coefficients.

    c0 is the log prediction error energy; c1..c_order follow from the
    standard LPC to cepstrum recursion. All-zero frames produce zero rows
    and are flagged in degenerate_mask.
    """
    frame_len, hop = _frame_geometry(buf.rate)
    frames = frame_signal(buf.samples, frame_len, hop)
    windowed = frames * np.hamming(frame_len)
    r = _autocorr(windowed, order)
    degenerate = r[:, 0] <= 0.0
    r = r.copy()
    r[degenerate, 0] = 1.0  # placeholder, rows zeroed below
    r[:, 0] *= 1.0 + 1e-9  # diagonal loading
    a, err = _levinson(r, order)
    T = frames.shape[0]
    c = np.zeros((T, n_coeffs))
    c[:, 0] = np.log(np.maximum(err, 1e-20))
    for m in range(1, n_coeffs):
        acc = -a[:, m].copy() if m <= order else np.zeros(T)
        for k in range(1, m):
            if m - k <= order:
                acc -= (k / m) * c[:, k] * a[:, m - k]
        c[:, m] = acc
    bad = degenerate | ~np.all(np.isfinite(c), axis=1)
    c[bad] = 0.0
    return FeatureMatrix(c, FRAME_LEN_SEC, HOP_SEC, _start_times(T), f"lpcc{n_coeffs}",
                         degenerate_mask=bad if bad.any() else None)


def sdc(fm: FeatureMatrix, n_base: int = 7, d: int = 1, p: int = 3,
        k: int = 7) -> FeatureMatrix:
    """Shifted delta cepstra over the first n_base coefficients.

    Block i of frame t is c(t + i*p + d) - c(t + i*p - d); out-of-range
    indices replicate the edge frames. Output dimension is n_base * k.
    """
    base = fm.rows[:, :n_base]
    T = base.shape[0]
    t = np.arange(T)
    blocks = []
    for i in range(k):
        hi = np.clip(t + i * p + d, 0, T - 1)
        lo = np.clip(t + i * p - d, 0, T - 1)
        blocks.append(base[hi] - base[lo])
    rows = np.hstack(blocks)
    return FeatureMatrix(rows, fm.frame_len_sec, fm.hop_sec,
                         fm.frame_start_times.copy(), f"sdc{n_base}-{d}-{p}-{k}",
                         voiced_mask=None if fm.voiced_mask is None else fm.voiced_mask.copy())


FEATURE_KINDS = ("mfcc13", "mfcc39", "lpcc", "sdc")


def extract_features(buf: AudioBuffer, kind: str = "mfcc13") -> FeatureMatrix:
    """Dispatch on the configured front end name."""
    if kind == "mfcc13":
        fm = mfcc(buf)
    elif kind == "mfcc39":
        fm = append_deltas(mfcc(buf))
    elif kind == "lpcc":
        fm = lpcc(buf)
    elif kind == "sdc":
        fm = sdc(mfcc(buf))
    else:
        raise ValueError(f"unknown feature kind {kind!r}, "
                         f"expected one of {FEATURE_KINDS}")
    fm.feature_kind = kind
    return fm


MAGIC = b"FTR1"


def save_features(path, fm: FeatureMatrix) -> None:
    """Binary feature dump: FTR1 magic, u32 T, u32 D, f64 frame/hop seconds,
    row-major float32 data, then T voiced-mask bytes."""
    path = Path(path)
    T, D = fm.rows.shape
    mask = fm.voiced_mask if fm.voiced_mask is not None else np.ones(T, dtype=bool)
    blob = (MAGIC + struct.pack("<II", T, D)
            + struct.pack("<dd", fm.frame_len_sec, fm.hop_sec)
            + fm.rows.astype("<f4").tobytes(order="C")
            + mask.astype(np.uint8).tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_features(path) -> FeatureMatrix:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    T, D = struct.unpack("<II", blob[4:12])
    frame_len_sec, hop_sec = struct.unpack("<dd", blob[12:28])
    need = 28 + 4 * T * D + T
    if len(blob) != need:
        raise FormatError(f"{path}: expected {need} bytes, got {len(blob)}")
    rows = np.frombuffer(blob, dtype="<f4", count=T * D, offset=28)
    rows = rows.reshape(T, D).astype(np.float64)
    mask = np.frombuffer(blob, dtype=np.uint8, count=T, offset=28 + 4 * T * D)
    times = np.arange(T, dtype=np.float64) * hop_sec
    return FeatureMatrix(rows, frame_len_sec, hop_sec, times, "imported",
                         voiced_mask=mask.astype(bool))
