"""Embedding scoring backend.

Length normalization, LDA and WCCN projections, cosine distance, a
two-covariance PLDA model with EM training and pairwise log-likelihood
ratio scoring, trial list construction, and equal error rate computation.
Also reads and writes embedding track files for imported vectors.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import (DimMismatch, FormatError, InsufficientClasses,
                     InsufficientVectors, OneClassOnly, RankDeficient,
                     SingularCovariance, ZeroVector)


@dataclass
class EmbeddingSet:
    vectors: np.ndarray  # (n, D)
    labels: np.ndarray  # (n,)

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        self.labels = np.asarray(self.labels)
        if self.labels.size != self.vectors.shape[0]:
            raise DimMismatch("one label per vector required")

    def by_class(self) -> dict:
        out = {}
        for lab in sorted(set(self.labels.tolist())):
            out[lab] = self.vectors[self.labels == lab]
        return out


def length_normalize(vectors: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("cannot length-normalize a zero vector")
    return V / norms[:, None]


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cosine similarity; 0 for parallel vectors, 2 for opposite."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimMismatch("vectors have different dimensions")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine distance undefined for zero vectors")
    return float(1.0 - np.dot(u, v) / (nu * nv))


def _scatter_matrices(E: EmbeddingSet) -> tuple[np.ndarray, np.ndarray]:
    V = E.vectors
    mu = V.mean(axis=0)
    D = V.shape[1]
    Sb = np.zeros((D, D))
    Sw = np.zeros((D, D))
    for lab, Vc in E.by_class().items():
        mc = Vc.mean(axis=0)
        dm = (mc - mu)[:, None]
        Sb += Vc.shape[0] * (dm @ dm.T)
        centered = Vc - mc
        Sw += centered.T @ centered
    n = V.shape[0]
    return Sb / n, Sw / n


def train_lda(E: EmbeddingSet, out_dim: int) -> np.ndarray:
    """Projection (out_dim, D) from the generalized eigenproblem of the
    between and within class scatter; within scatter gets a small ridge."""
    classes = E.by_class()
    if len(classes) < 2:
        raise InsufficientClasses("LDA needs at least two classes")
    D = E.vectors.shape[1]
    if out_dim < 1 or out_dim > min(D, len(classes) - 1):
        raise RankDeficient(
            f"out_dim {out_dim} exceeds min(D={D}, n_classes-1={len(classes) - 1})")
    Sb, Sw = _scatter_matrices(E)
    Sw = Sw + (1e-6 * np.trace(Sw) / D) * np.eye(D)
    try:
        eigvals, eigvecs = linalg.eigh(Sb, Sw)
    except linalg.LinAlgError as exc:
        raise SingularCovariance("within-class scatter not invertible") from exc
    order = np.argsort(eigvals)[::-1][:out_dim]
    return eigvecs[:, order].T.copy()


def train_wccn(E: EmbeddingSet) -> np.ndarray:
    """Whitening transform B with B W B^T = I, W the average within-class
    covariance; B is the transposed Cholesky factor of inv(W)."""
    classes = E.by_class()
    if len(classes) < 2:
        raise InsufficientClasses("WCCN needs at least two classes")
    D = E.vectors.shape[1]
    W = np.zeros((D, D))
    for lab, Vc in classes.items():
        centered = Vc - Vc.mean(axis=0)
        W += centered.T @ centered / max(Vc.shape[0], 1)
    W /= len(classes)
    if np.trace(W) <= 0.0:
        raise SingularCovariance("no within-class variation")
    try:
        Winv = np.linalg.inv(W)
        L = np.linalg.cholesky(0.5 * (Winv + Winv.T))
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("average within-class covariance singular") from exc
    return L.T.copy()


@dataclass
class PldaModel:
    mean: np.ndarray  # (D,)
    between_cov: np.ndarray  # (D, D)
    within_cov: np.ndarray  # (D, D)
    ll_trace: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.mean.size


def _logdet(mat: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(mat)
    if sign <= 0:
        raise SingularCovariance("covariance with non-positive determinant")
    return float(val)


def _floor_eigenvalues(mat: np.ndarray, rel: float = 1e-10) -> np.ndarray:
    # condition-number cap; inert when the matrix is well conditioned
    vals, vecs = np.linalg.eigh(mat)
    floor = rel * float(vals.max())
    if floor <= 0.0 or vals.min() >= floor:
        return mat
    return (vecs * np.maximum(vals, floor)) @ vecs.T


def _marginal_ll(class_blocks, mu, B, W) -> float:
    """Marginal log-likelihood of labelled vectors under the two-covariance
    model: x = y + e with y ~ N(mu, B) and e ~ N(0, W)."""
    D = mu.size
    Binv = np.linalg.inv(B)
    Winv = np.linalg.inv(W)
    ld_B = _logdet(B)
    ld_W = _logdet(W)
    total = 0.0
    for Vc in class_blocks:
        n = Vc.shape[0]
        Xc = Vc - mu
        P = Binv + n * Winv
        m = Winv @ Xc.sum(axis=0)
        quad = float(np.sum((Xc @ Winv) * Xc))
        mPm = float(m @ np.linalg.solve(P, m))
        total += -0.5 * (n * D * np.log(2.0 * np.pi) + n * ld_W + ld_B
                         + _logdet(P) + quad - mPm)
    return total


def train_plda(E: EmbeddingSet, n_iters: int = 10) -> PldaModel:
    """Two-covariance PLDA via EM on length-normalized vectors.

    The returned model carries the marginal log-likelihood trace, one entry
    per iteration evaluated before that iteration's update; EM makes it
    non-decreasing.
    """
    classes = E.by_class()
    if len(classes) < 2:
        raise InsufficientClasses("PLDA needs at least two classes")
    blocks = [length_normalize(Vc) for Vc in classes.values()]
    D = blocks[0].shape[1]
    n_total = sum(b.shape[0] for b in blocks)

    mu = np.vstack(blocks).mean(axis=0)
    class_means = np.stack([b.mean(axis=0) for b in blocks])
    B = np.cov(class_means.T, bias=True).reshape(D, D)
    W = np.zeros((D, D))
    for b in blocks:
        centered = b - b.mean(axis=0)
        W += centered.T @ centered
    W /= n_total
    if np.trace(W) <= 0.0:
        raise SingularCovariance("no within-class variation for PLDA")
    ridge_w = 1e-6 * np.trace(W) / D
    ridge_b = 1e-6 * max(np.trace(B) / D, ridge_w)
    W = W + ridge_w * np.eye(D)
    B = B + ridge_b * np.eye(D)

    trace = np.empty(n_iters)
    for it in range(n_iters):
        trace[it] = _marginal_ll(blocks, mu, B, W)
        Binv = np.linalg.inv(B)
        Winv = np.linalg.inv(W)
        y_hats, sigmas, counts = [], [], []
        for b in blocks:
            n = b.shape[0]
            P = Binv + n * Winv
            Sigma = np.linalg.inv(P)
            y = Sigma @ (Binv @ mu + Winv @ b.sum(axis=0))
            y_hats.append(y)
            sigmas.append(Sigma)
            counts.append(n)
        Y = np.stack(y_hats)
        mu = Y.mean(axis=0)
        B = np.zeros((D, D))
        for y, Sigma in zip(y_hats, sigmas):
            dy = (y - mu)[:, None]
            B += Sigma + dy @ dy.T
        B /= len(blocks)
        W = np.zeros((D, D))
        for b, y, Sigma, n in zip(blocks, y_hats, sigmas, counts):
            r = b - y
            W += r.T @ r + n * Sigma
        W /= n_total
        # vectors confined to a lower-dimensional subspace (occupancy
        # vectors live on the simplex) drive the null direction's
        # eigenvalue to zero geometrically; cap the condition number so
        # EM keeps running instead of hitting a singular determinant
        B = _floor_eigenvalues(0.5 * (B + B.T))
        W = _floor_eigenvalues(0.5 * (W + W.T))
    model = PldaModel(mu, B, W)
    model.ll_trace = trace
    return model


def _score_terms(model: PldaModel) -> dict:
    if "Kj" not in model._cache:
        D = model.dim
        St = model.between_cov + model.within_cov
        joint = np.block([[St, model.between_cov], [model.between_cov, St]])
        Kj = np.linalg.inv(joint)
        Lam = np.linalg.inv(St)
        const = -0.5 * _logdet(joint) + _logdet(St)
        model._cache.update(Kj=Kj, Lam=Lam, const=const)
    return model._cache


def plda_score_many(model: PldaModel, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Symmetric same/different log-likelihood ratio for row-paired U, V.

    Inputs are length-normalized to match training. The ratio compares the
    joint density under a shared latent class variable against independent
    draws.
    """
    U = length_normalize(U) - model.mean
    V = length_normalize(V) - model.mean
    if U.shape != V.shape or U.shape[1] != model.dim:
        raise DimMismatch("pair arrays must match the model dimension")
    terms = _score_terms(model)
    Wm = np.hstack([U, V])
    quad_joint = np.einsum("ij,ij->i", Wm @ terms["Kj"], Wm)
    quad_u = np.einsum("ij,ij->i", U @ terms["Lam"], U)
    quad_v = np.einsum("ij,ij->i", V @ terms["Lam"], V)
    return -0.5 * quad_joint + 0.5 * (quad_u + quad_v) + terms["const"]


def plda_score(model: PldaModel, u: np.ndarray, v: np.ndarray) -> float:
    return float(plda_score_many(model, np.atleast_2d(u), np.atleast_2d(v))[0])


def build_trials(E: EmbeddingSet, n_each: int = 2000,
                 seed: int = 0) -> list[tuple[int, int, bool]]:
    """Sample same-class and different-class index pairs, n_each of both.

    No self pairs; same-class pairs use two distinct vectors. Returns
    (i, j, is_same) triples, same-class trials first.
    """
    labels = E.labels
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise OneClassOnly("different-class trials need two classes")
    idx_by_class = {lab: np.flatnonzero(labels == lab) for lab in classes}
    eligible_same = [lab for lab in classes if idx_by_class[lab].size >= 2]
    if not eligible_same:
        raise InsufficientVectors("no class has two vectors for same-class trials")
    rng = np.random.default_rng(seed)
    trials = []
    for _ in range(n_each):
        lab = eligible_same[int(rng.integers(len(eligible_same)))]
        i, j = rng.choice(idx_by_class[lab], size=2, replace=False)
        trials.append((int(i), int(j), True))
    for _ in range(n_each):
        la, lb = rng.choice(len(classes), size=2, replace=False)
        i = int(rng.choice(idx_by_class[classes[la]]))
        j = int(rng.choice(idx_by_class[classes[lb]]))
        trials.append((i, j, False))
    return trials


def eer(scores: np.ndarray, is_target: np.ndarray) -> float:
    """Equal error rate in percent.

    Operating points from a full threshold sweep are reduced to their
    convex frontier and the FAR = FRR crossing is found by linear
    interpolation between the adjacent frontier points. Depends only on
    the ordering of scores, so any monotone transform leaves it unchanged.
    """
    scores = np.asarray(scores, dtype=np.float64)
    is_target = np.asarray(is_target, dtype=bool)
    n_t = int(is_target.sum())
    n_n = int((~is_target).sum())
    if n_t == 0 or n_n == 0:
        raise InsufficientVectors("EER needs both target and non-target scores")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    target_sorted = is_target[order]
    # operating points only at boundaries between distinct scores
    boundaries = np.flatnonzero(np.diff(sorted_scores)) + 1
    ks = np.concatenate([[0], boundaries, [scores.size]])
    cum_t = np.concatenate([[0], np.cumsum(target_sorted)])
    fa = (ks - cum_t[ks]) / n_n
    miss = (n_t - cum_t[ks]) / n_t
    pts = np.stack([fa, miss], axis=1)
    # keep the best miss per false-alarm level, then the lower convex hull
    order2 = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order2]
    dedup = []
    for p in pts:
        if dedup and dedup[-1][0] == p[0]:
            continue
        dedup.append(p)
    hull = []
    for p in dedup:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(tuple(p))
    for (x1, y1), (x2, y2) in zip(hull[:-1], hull[1:]):
        d1, d2 = y1 - x1, y2 - x2
        if d1 == 0.0:
            return 100.0 * x1
        if d1 > 0.0 >= d2:
            t = d1 / (d1 - d2)
            return 100.0 * (x1 + t * (x2 - x1))
    x, y = hull[-1]
    return 100.0 * (0.5 * (x + y))


@dataclass
class EmbeddingTrack:
    ranges: np.ndarray  # (n, 2) int voiced-frame spans [start, end)
    vectors: np.ndarray  # (n, D)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def lookup(self, voiced_pos: float) -> np.ndarray:
        """Vector whose span covers the position; nearest span otherwise."""
        starts = self.ranges[:, 0]
        ends = self.ranges[:, 1]
        inside = np.flatnonzero((starts <= voiced_pos) & (voiced_pos < ends))
        if inside.size:
            return self.vectors[inside[0]]
        centers = 0.5 * (starts + ends)
        return self.vectors[int(np.argmin(np.abs(centers - voiced_pos)))]


EMB_MAGIC = "EMB1"


def export_embeddings(path, track: EmbeddingTrack) -> None:
    """Text track: header 'EMB1 dim=<D>', rows start, end, comma-joined values."""
    path = Path(path)
    lines = [f"{EMB_MAGIC} dim={track.dim}"]
    for (s, e), vec in zip(track.ranges, track.vectors):
        vals = ",".join(f"{v:.17g}" for v in vec)
        lines.append(f"{int(s)}\t{int(e)}\t{vals}")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def import_embeddings(path, expected_dim: int | None = None) -> EmbeddingTrack:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(f"{EMB_MAGIC} dim="):
        raise FormatError(f"{path}: bad embedding header")
    try:
        dim = int(lines[0].split("dim=")[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad embedding header") from exc
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatch(f"{path}: dim {dim} != expected {expected_dim}")
    ranges, vectors = [], []
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{path}: bad embedding row {line!r}")
        try:
            start, end = int(parts[0]), int(parts[1])
            vec = np.array([float(tok) for tok in parts[2].split(",")])
        except ValueError as exc:
            raise FormatError(f"{path}: bad embedding row {line!r}") from exc
        if vec.size != dim or not np.all(np.isfinite(vec)):
            raise FormatError(f"{path}: bad embedding row {line!r}")
        if end <= start:
            raise FormatError(f"{path}: empty span in row {line!r}")
        ranges.append((start, end))
        vectors.append(vec)
    if not vectors:
        raise FormatError(f"{path}: no embedding rows")
    return EmbeddingTrack(np.array(ranges, dtype=np.int64), np.stack(vectors))


def _write_matrix_file(path, magic_line: str, blocks) -> None:
    lines = [magic_line]
    for block in blocks:
        arr = np.atleast_2d(np.asarray(block, dtype=np.float64))
        lines += [" ".join(f"{v:.17g}" for v in row) for row in arr]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def save_lda(path, P: np.ndarray) -> None:
    out_dim, D = P.shape
    _write_matrix_file(path, f"LDA1 {out_dim} {D}", [P])


def load_lda(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "LDA1":
        raise FormatError(f"{path}: bad LDA header")
    out_dim, D = int(head[1]), int(head[2])
    rows = [np.array([float(t) for t in ln.split()]) for ln in lines[1:1 + out_dim]]
    P = np.stack(rows)
    if P.shape != (out_dim, D):
        raise FormatError(f"{path}: LDA shape mismatch")
    return P


def save_wccn(path, B: np.ndarray) -> None:
    _write_matrix_file(path, f"WCCN1 {B.shape[0]}", [B])


def load_wccn(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != "WCCN1":
        raise FormatError(f"{path}: bad WCCN header")
    D = int(head[1])
    rows = [np.array([float(t) for t in ln.split()]) for ln in lines[1:1 + D]]
    B = np.stack(rows)
    if B.shape != (D, D):
        raise FormatError(f"{path}: WCCN shape mismatch")
    return B


def save_plda(path, model: PldaModel) -> None:
    D = model.dim
    _write_matrix_file(path, f"PLDA1 {D}",
                       [model.mean[None, :], model.between_cov, model.within_cov])


def load_plda(path) -> PldaModel:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != "PLDA1":
        raise FormatError(f"{path}: bad PLDA header")
    D = int(head[1])
    if len(lines) < 1 + 1 + 2 * D:
        raise FormatError(f"{path}: truncated PLDA file")
    rows = [np.array([float(t) for t in ln.split()]) for ln in lines[1:2 + 2 * D]]
    mean = rows[0]
    B = np.stack(rows[1:1 + D])
    W = np.stack(rows[1 + D:1 + 2 * D])
    if mean.size != D or B.shape != (D, D) or W.shape != (D, D):
        raise FormatError(f"{path}: PLDA shape mismatch")
    return PldaModel(mean, B, W)
