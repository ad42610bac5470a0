"""Change point detection on voiced feature streams.

A distance contour compares the N voiced frames before each position with
the N frames after it, either by symmetric KL of windowed Gaussian fits or
by a distance between window embeddings. The contour is smoothed, compared
against an adaptive trailing-mean threshold, and surviving peaks become
hypothesized change points mapped back to seconds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .backend import (EmbeddingTrack, PldaModel, length_normalize,
                      plda_score_many)
from .errors import ExtractorMismatch, TooFewFrames, ZeroVector
from .features import FeatureMatrix, extract_features
from .gaussian import VAR_FLOOR, DiagGmm
from .vad import DEFAULT_RATIO, energy_vad, select_voiced

MODES = ("gaussian-kl", "embedding-cosine", "embedding-plda")


@dataclass
class DetectorConfig:
    window: int = 150  # voiced frames per side
    alpha: float = 1.0  # threshold scale on the trailing mean
    gamma: float = 0.9  # min peak distance as a fraction of window
    delta: float = 1.3  # smoothing length divisor
    mode: str = "gaussian-kl"

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be at least 1 voiced frame")
        if self.alpha <= 0.0 or self.gamma <= 0.0 or self.delta <= 0.0:
            raise ValueError("alpha, gamma, delta must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def smoothing_len(self) -> int:
        return max(1, int(round(self.window / self.delta)))

    @property
    def min_peak_distance(self) -> int:
        return max(1, int(round(self.gamma * self.window)))


@dataclass
class DistanceContour:
    values: np.ndarray  # one value per valid voiced position
    start: int  # voiced index of values[0]
    window: int
    smoothed: bool = False


@dataclass
class ChangePointSet:
    voiced_indices: np.ndarray  # -1 when unknown (reference sets)
    frame_indices: np.ndarray
    times_sec: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.times_sec = np.asarray(self.times_sec, dtype=np.float64)
        if self.times_sec.size > 1 and not np.all(np.diff(self.times_sec) > 0):
            raise ValueError("change point times must be strictly increasing")

    @classmethod
    def from_times(cls, times, scores=None):
        times = np.asarray(times, dtype=np.float64)
        filler = np.full(times.size, -1, dtype=np.int64)
        if scores is None:
            scores = np.zeros(times.size)
        return cls(filler, filler.copy(), times, np.asarray(scores, dtype=np.float64))

    def __len__(self):
        return self.times_sec.size


@dataclass
class ModelBundle:
    """Trained models and transforms used by the embedding modes."""
    ubm: DiagGmm | None = None
    class_models: dict = field(default_factory=dict)  # label -> DiagGmm
    lda: np.ndarray | None = None
    wccn: np.ndarray | None = None
    plda: PldaModel | None = None
    embedding_track: EmbeddingTrack | None = None
    length_norm: bool = True

    @property
    def extractor_kind(self) -> str:
        if self.embedding_track is not None:
            return "import"
        if self.class_models:
            return "class"
        if self.ubm is not None:
            return "ubm"
        raise ExtractorMismatch("bundle has no embedding source")

    def ordered_class_models(self) -> list[DiagGmm]:
        return [self.class_models[lab] for lab in sorted(self.class_models)]

    def transform(self, V: np.ndarray) -> np.ndarray:
        out = np.atleast_2d(V)
        if self.lda is not None:
            out = out @ self.lda.T
        if self.wccn is not None:
            out = out @ self.wccn.T
        if self.length_norm:
            out = length_normalize(out)
        return out


def _window_slices(n_frames: int, window: int) -> np.ndarray:
    if n_frames < 2 * window + 1:
        raise TooFewFrames(
            f"contour needs at least {2 * window + 1} voiced frames, got {n_frames}")
    return np.arange(window, n_frames - window + 1)


def gaussian_kl_contour(fm: FeatureMatrix, window: int) -> DistanceContour:
    """Symmetric KL between diagonal Gaussians fit on the trailing and
    leading window at every valid voiced position.

    Windowed moments come from cumulative sums, which matches per-position
    Gaussian fits to rounding error.
    """
    X = fm.rows
    pos = _window_slices(X.shape[0], window)
    c1 = np.vstack([np.zeros(X.shape[1]), np.cumsum(X, axis=0)])
    c2 = np.vstack([np.zeros(X.shape[1]), np.cumsum(X * X, axis=0)])
    mean_l = (c1[pos] - c1[pos - window]) / window
    mean_r = (c1[pos + window] - c1[pos]) / window
    var_l = np.maximum((c2[pos] - c2[pos - window]) / window - mean_l ** 2, VAR_FLOOR)
    var_r = np.maximum((c2[pos + window] - c2[pos]) / window - mean_r ** 2, VAR_FLOOR)
    d2 = (mean_l - mean_r) ** 2
    vals = 0.5 * np.sum((var_l + d2) / var_r + (var_r + d2) / var_l - 2.0, axis=1)
    return DistanceContour(np.maximum(vals, 0.0), window, window)


def _posterior_track(bundle: ModelBundle, X: np.ndarray) -> np.ndarray:
    if bundle.extractor_kind == "class":
        models = bundle.ordered_class_models()
    else:
        models = [bundle.ubm]
    parts = [g.posteriors(X)[0] for g in models]
    return np.hstack(parts)


def _window_embeddings(bundle: ModelBundle, fm: FeatureMatrix,
                       window: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left and right window embeddings per valid position."""
    pos = _window_slices(fm.n_frames, window)
    if bundle.extractor_kind == "import":
        track = bundle.embedding_track
        left = np.stack([track.lookup(i - 0.5 * window) for i in pos])
        right = np.stack([track.lookup(i + 0.5 * window) for i in pos])
    else:
        post = _posterior_track(bundle, fm.rows)
        c = np.vstack([np.zeros(post.shape[1]), np.cumsum(post, axis=0)])
        left = (c[pos] - c[pos - window]) / window
        right = (c[pos + window] - c[pos]) / window
    return pos, bundle.transform(left), bundle.transform(right)


def _cosine_rows(L: np.ndarray, R: np.ndarray) -> np.ndarray:
    nl = np.linalg.norm(L, axis=1)
    nr = np.linalg.norm(R, axis=1)
    if np.any(nl == 0.0) or np.any(nr == 0.0):
        raise ZeroVector("zero-norm window embedding")
    return 1.0 - np.sum(L * R, axis=1) / (nl * nr)


def embedding_contour(fm: FeatureMatrix, bundle: ModelBundle, window: int,
                      scorer: str = "cosine") -> DistanceContour:
    """Distance between left and right window embeddings per position.

    Occupancy embeddings are windowed means of per-frame component
    posteriors, so they equal the occupancy vector of each window. The
    PLDA scorer is negated: larger values mean more dissimilar windows.
    """
    pos, L, R = _window_embeddings(bundle, fm, window)
    if scorer == "cosine":
        vals = _cosine_rows(L, R)
    elif scorer == "plda":
        if bundle.plda is None:
            raise ExtractorMismatch("PLDA scoring requested without a PLDA model")
        vals = -plda_score_many(bundle.plda, L, R)
    else:
        raise ValueError(f"unknown scorer {scorer!r}")
    return DistanceContour(vals, window, window)


def smooth_contour(contour: DistanceContour, length: int) -> DistanceContour:
    """Normalized Hamming moving average with edge replication.

    Length 1 is the identity; smoothing never raises the global maximum."""
    vals = contour.values
    if length <= 1:
        return DistanceContour(vals.copy(), contour.start, contour.window, True)
    w = np.hamming(length)
    w = w / w.sum()
    left = (length - 1) // 2
    right = length - 1 - left
    padded = np.pad(vals, (left, right), mode="edge")
    sm = np.convolve(padded, w, mode="valid")
    return DistanceContour(sm, contour.start, contour.window, True)


def threshold_contour(values: np.ndarray, window: int, alpha: float) -> np.ndarray:
    """Adaptive threshold: alpha times the mean of the previous `window`
    contour values, warming up on the available prefix; the first position
    uses its own value."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    th = np.empty(n)
    th[0] = alpha * values[0]
    if n > 1:
        c = np.concatenate([[0.0], np.cumsum(values)])
        i = np.arange(1, n)
        lo = np.maximum(0, i - window)
        th[1:] = alpha * (c[i] - c[lo]) / (i - lo)
    return th


def pick_peaks(values: np.ndarray, threshold: np.ndarray,
               min_distance: int) -> np.ndarray:
    """Local maxima (plateaus count once, at their left edge), pruned
    greedily by height to enforce min_distance, then kept only where the
    value exceeds the threshold. Returned sorted by position."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    candidates = []
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            if j + 1 < n and values[j + 1] < values[i]:
                candidates.append(i)
            i = j + 1
        else:
            i += 1
    candidates.sort(key=lambda idx: (-values[idx], idx))
    accepted = []
    for idx in candidates:
        if all(abs(idx - a) >= min_distance for a in accepted):
            accepted.append(idx)
    kept = [idx for idx in accepted if values[idx] > threshold[idx]]
    return np.array(sorted(kept), dtype=np.int64)


def detect_changes_from_features(fm: FeatureMatrix, cfg: DetectorConfig,
                                 bundle: ModelBundle | None = None) -> ChangePointSet:
    """Run the contour pipeline on an already voiced-selected feature matrix."""
    if cfg.mode == "gaussian-kl":
        contour = gaussian_kl_contour(fm, cfg.window)
    else:
        if bundle is None:
            raise ExtractorMismatch(f"mode {cfg.mode} needs trained models")
        scorer = "cosine" if cfg.mode == "embedding-cosine" else "plda"
        contour = embedding_contour(fm, bundle, cfg.window, scorer)
    sm = smooth_contour(contour, cfg.smoothing_len)
    th = threshold_contour(sm.values, cfg.window, cfg.alpha)
    peaks = pick_peaks(sm.values, th, cfg.min_peak_distance)
    voiced = peaks + sm.start
    if fm.voiced_index_map is not None:
        frames = fm.voiced_index_map[voiced]
    else:
        frames = voiced.copy()
    times = fm.frame_start_times[voiced] + 0.5 * fm.frame_len_sec
    return ChangePointSet(voiced, frames, times, sm.values[peaks])


def detect_changes(buf: AudioBuffer, cfg: DetectorConfig,
                   bundle: ModelBundle | None = None,
                   feature_kind: str = "mfcc13",
                   vad_ratio: float = DEFAULT_RATIO) -> ChangePointSet:
    """Featurize, drop unvoiced frames, and detect change points."""
    fm = extract_features(buf, feature_kind)
    vad = energy_vad(buf, vad_ratio)
    voiced_fm = select_voiced(fm, vad)
    return detect_changes_from_features(voiced_fm, cfg, bundle)
