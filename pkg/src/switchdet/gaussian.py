"""Diagonal Gaussian and GMM statistics.

Covers single-Gaussian fits with symmetric KL divergence, EM training of
diagonal-covariance mixtures, means-only MAP adaptation, and per-component
occupancy vectors used as utterance/window embeddings.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DimMismatch, EmptyInput, FormatError, ModelShapeMismatch,
                     TooFewFrames)

VAR_FLOOR = 1e-6


@dataclass
class DiagGaussian:
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise DimMismatch("mean and var must be 1-D and equal length")


@dataclass
class DiagGmm:
    weights: np.ndarray  # (M,)
    means: np.ndarray  # (M, D)
    variances: np.ndarray  # (M, D)
    ll_trace: np.ndarray | None = None  # mean log-likelihood per EM iteration

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_densities(self, X: np.ndarray) -> np.ndarray:
        """Per-frame, per-component log of weight * component density."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimMismatch(f"data dim {X.shape[1]} != model dim {self.dim}")
        inv_v = 1.0 / self.variances
        logdet = np.sum(np.log(self.variances), axis=1)
        quad = (X * X) @ inv_v.T - 2.0 * X @ (self.means * inv_v).T \
            + np.sum(self.means * self.means * inv_v, axis=1)
        logp = -0.5 * (self.dim * np.log(2.0 * np.pi) + logdet + quad)
        return logp + np.log(self.weights)

    def posteriors(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Component posteriors per frame plus per-frame total log-likelihood."""
        logp = self.log_densities(X)
        top = np.max(logp, axis=1, keepdims=True)
        shifted = np.exp(logp - top)
        norm = np.sum(shifted, axis=1, keepdims=True)
        frame_ll = top[:, 0] + np.log(norm[:, 0])
        return shifted / norm, frame_ll

    def mean_log_likelihood(self, X: np.ndarray) -> float:
        return float(np.mean(self.posteriors(X)[1]))


@dataclass
class StatVector:
    values: np.ndarray  # occupancy probabilities
    kind: str  # "ubm" (one model) or "class" (stacked over class models)


def fit_diag_gaussian(X: np.ndarray) -> DiagGaussian:
    """Per-dimension mean and biased variance, floored at VAR_FLOOR."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyInput("cannot fit a Gaussian on zero rows")
    mean = X.mean(axis=0)
    var = np.maximum(X.var(axis=0), VAR_FLOOR)
    return DiagGaussian(mean, var)


def symmetric_kl(a: DiagGaussian, b: DiagGaussian) -> float:
    """KL(a||b) + KL(b||a) for diagonal Gaussians.

    The log-determinant terms cancel, leaving
    0.5 * sum((va + d^2)/vb + (vb + d^2)/va - 2) with d = mean_a - mean_b.
    """
    if a.mean.shape != b.mean.shape:
        raise DimMismatch("Gaussians have different dimensions")
    d2 = (a.mean - b.mean) ** 2
    return float(0.5 * np.sum((a.var + d2) / b.var + (b.var + d2) / a.var - 2.0))


def _kmeans_pp_init(X: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    # canonical row order makes the seeded choice independent of input order
    order = np.lexsort(X.T[::-1])
    Xc = X[order]
    n = Xc.shape[0]
    centers = np.empty((M, X.shape[1]))
    centers[0] = Xc[rng.integers(n)]
    d2 = np.sum((Xc - centers[0]) ** 2, axis=1)
    for m in range(1, M):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[m] = Xc[idx]
        d2 = np.minimum(d2, np.sum((Xc - centers[m]) ** 2, axis=1))
    return centers


def train_gmm_em(X: np.ndarray, M: int, n_iters: int = 20,
                 seed: int = 0) -> DiagGmm:
    """EM training of a diagonal-covariance GMM.

    Initialization is k-means++ seeding from the given seed; variances are
    floored at VAR_FLOOR each M step. The returned model carries the mean
    log-likelihood trace, one entry per iteration, which is non-decreasing
    up to the flooring tolerance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, D = X.shape
    if n < 10 * M:
        raise TooFewFrames(f"need at least {10 * M} rows for M={M}, got {n}")
    rng = np.random.default_rng(seed)
    means = _kmeans_pp_init(X, M, rng)
    variances = np.tile(np.maximum(X.var(axis=0), VAR_FLOOR), (M, 1))
    weights = np.full(M, 1.0 / M)
    gmm = DiagGmm(weights, means, variances)
    trace = np.empty(n_iters)
    for it in range(n_iters):
        resp, frame_ll = gmm.posteriors(X)
        trace[it] = float(np.mean(frame_ll))
        nk = resp.sum(axis=0)
        alive = nk > 1e-10
        sum_x = resp.T @ X
        sum_x2 = resp.T @ (X * X)
        new_means = gmm.means.copy()
        new_vars = gmm.variances.copy()
        new_means[alive] = sum_x[alive] / nk[alive, None]
        new_vars[alive] = np.maximum(
            sum_x2[alive] / nk[alive, None] - new_means[alive] ** 2, VAR_FLOOR)
        new_w = np.maximum(nk / n, 1e-300)
        gmm = DiagGmm(new_w / new_w.sum(), new_means, new_vars)
    gmm.ll_trace = trace
    return gmm


def map_adapt_means(ubm: DiagGmm, X: np.ndarray, relevance: float = 16.0) -> DiagGmm:
    """Means-only MAP adaptation of a UBM toward class data.

    new_mean_i = (n_i * xbar_i + r * mean_i) / (n_i + r) with n_i the soft
    frame count under the UBM. Weights and variances are copied unchanged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyInput("no adaptation data")
    resp, _ = ubm.posteriors(X)
    nk = resp.sum(axis=0)
    sum_x = resp.T @ X
    denom = nk + relevance
    new_means = ubm.means.copy()
    ok = denom > 0.0
    new_means[ok] = (sum_x[ok] + relevance * ubm.means[ok]) / denom[ok, None]
    return DiagGmm(ubm.weights.copy(), new_means, ubm.variances.copy())


def occupancy_vector(model: DiagGmm, X: np.ndarray) -> StatVector:
    """Average component posterior over the frames; sums to one."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyInput("no frames for occupancy statistics")
    resp, _ = model.posteriors(X)
    return StatVector(resp.mean(axis=0), "ubm")


def class_occupancy_vector(class_models: list[DiagGmm], X: np.ndarray) -> StatVector:
    """Occupancy vectors under each class-adapted model, concatenated."""
    if not class_models:
        raise EmptyInput("no class models")
    M, D = class_models[0].n_components, class_models[0].dim
    for g in class_models[1:]:
        if g.n_components != M or g.dim != D:
            raise ModelShapeMismatch("class models disagree on M or D")
    parts = [occupancy_vector(g, X).values for g in class_models]
    return StatVector(np.concatenate(parts), "class")


MAGIC = "GMM1"


def _fmt(values) -> str:
    return " ".join(f"{v:.17g}" for v in np.asarray(values, dtype=np.float64))


def save_gmm(path, gmm: DiagGmm, label: str | None = None) -> None:
    """Text container: header line, weights line, M mean lines, M variance
    lines. Floats carry 17 significant digits so round-trips are exact."""
    path = Path(path)
    header = f"{MAGIC} {gmm.n_components} {gmm.dim}"
    if label is not None:
        header += f" class={label}"
    lines = [header, _fmt(gmm.weights)]
    lines += [_fmt(row) for row in gmm.means]
    lines += [_fmt(row) for row in gmm.variances]
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_gmm(path) -> tuple[DiagGmm, str | None]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) not in (3, 4) or head[0] != MAGIC:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    try:
        M, D = int(head[1]), int(head[2])
    except ValueError as exc:
        raise FormatError(f"{path}: bad header {lines[0]!r}") from exc
    label = None
    if len(head) == 4:
        if not head[3].startswith("class="):
            raise FormatError(f"{path}: bad header field {head[3]!r}")
        label = head[3][len("class="):]
    if len(lines) < 2 + 2 * M:
        raise FormatError(f"{path}: expected {2 + 2 * M} lines, got {len(lines)}")

    def parse(line, count):
        vals = np.array([float(tok) for tok in line.split()])
        if vals.size != count or not np.all(np.isfinite(vals)):
            raise FormatError(f"{path}: bad value row")
        return vals

    weights = parse(lines[1], M)
    means = np.stack([parse(lines[2 + i], D) for i in range(M)])
    variances = np.stack([parse(lines[2 + M + i], D) for i in range(M)])
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-6 or np.any(variances <= 0):
        raise FormatError(f"{path}: invalid model parameters")
    return DiagGmm(weights, means, variances), label
