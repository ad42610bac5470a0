"""Detection scoring and corpus statistics.

Each reference change point is classified against the hypotheses inside a
symmetric time collar: exactly one hypothesis identifies it, none misses
it, several make a false-alarm case. Rates are percentages of reference
points and always sum to 100. Also provides the trial-level detection
error rate, a one-way ANOVA F statistic, and the true-versus-false
distance discrimination study over window sizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Annotation
from .detect import ChangePointSet
from .errors import (EmptyInput, EmptyReference, InsufficientMargin,
                     InvalidCounts)
from .features import FeatureMatrix
from .gaussian import fit_diag_gaussian, symmetric_kl
from .seeding import derive_rng


@dataclass
class EvalConfig:
    collar_sec: float = 1.0

    def __post_init__(self):
        if self.collar_sec <= 0.0:
            raise ValueError("collar must be positive")


@dataclass
class UttScore:
    utt_id: str
    n_ref: int
    n_identified: int
    n_missed: int
    n_multi: int
    deviations: list  # signed hyp - ref seconds, identified refs only


@dataclass
class EvalReport:
    idr: float  # identification rate, percent
    far: float  # false alarm rate, percent
    mdr: float  # miss rate, percent
    dm_sec: float  # mean absolute deviation of identified points
    n_ref: int
    n_identified: int
    n_missed: int
    n_multi: int
    collar_sec: float
    rows: list = field(default_factory=list)


def _classify(ref_times, hyp_times, collar):
    identified, missed, multi, deviations = 0, 0, 0, []
    for r in ref_times:
        hits = [h for h in hyp_times if abs(h - r) <= collar]
        if len(hits) == 1:
            identified += 1
            deviations.append(hits[0] - r)
        elif not hits:
            missed += 1
        else:
            multi += 1
    return identified, missed, multi, deviations


def _report_from_rows(rows: list, collar: float) -> EvalReport:
    n_ref = sum(r.n_ref for r in rows)
    n_id = sum(r.n_identified for r in rows)
    n_miss = sum(r.n_missed for r in rows)
    n_multi = sum(r.n_multi for r in rows)
    deviations = [d for r in rows for d in r.deviations]
    dm = float(np.mean(np.abs(deviations))) if deviations else 0.0
    return EvalReport(100.0 * n_id / n_ref, 100.0 * n_multi / n_ref,
                      100.0 * n_miss / n_ref, dm, n_ref, n_id, n_miss, n_multi,
                      collar, rows)


def score_detection(refs: ChangePointSet, hyps: ChangePointSet,
                    cfg: EvalConfig, utt_id: str = "") -> EvalReport:
    """Score one utterance's hypotheses against its references."""
    if len(refs) == 0:
        raise EmptyReference("no reference change points")
    n_id, n_miss, n_multi, devs = _classify(refs.times_sec, hyps.times_sec,
                                            cfg.collar_sec)
    row = UttScore(utt_id, len(refs), n_id, n_miss, n_multi, devs)
    return _report_from_rows([row], cfg.collar_sec)


def evaluate_corpus(pairs: dict, cfg: EvalConfig) -> EvalReport:
    """Aggregate over utterances; pairs maps utt_id -> (refs, hyps)."""
    if not pairs:
        raise EmptyReference("no utterances to evaluate")
    rows = []
    for utt_id in sorted(pairs):
        refs, hyps = pairs[utt_id]
        if len(refs) == 0:
            raise EmptyReference(f"{utt_id}: no reference change points")
        n_id, n_miss, n_multi, devs = _classify(refs.times_sec, hyps.times_sec,
                                                cfg.collar_sec)
        rows.append(UttScore(utt_id, len(refs), n_id, n_miss, n_multi, devs))
    return _report_from_rows(rows, cfg.collar_sec)


def detection_error_rate(false_accepts: int, false_rejects: int,
                         n_trials: int) -> float:
    """Trial-level error rate (FA + FR) / N."""
    if n_trials <= 0 or false_accepts < 0 or false_rejects < 0:
        raise InvalidCounts("counts must be non-negative with n_trials > 0")
    if false_accepts + false_rejects > n_trials:
        raise InvalidCounts("more errors than trials")
    return (false_accepts + false_rejects) / n_trials


def anova_f(groups: list) -> tuple[float, int, int]:
    """One-way ANOVA F statistic with its degrees of freedom.

    Zero between-group scatter gives F = 0; zero within-group scatter with
    separated means gives the +inf sentinel."""
    if len(groups) < 2:
        raise EmptyInput("ANOVA needs at least two groups")
    arrays = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if any(a.size == 0 for a in arrays):
        raise EmptyInput("ANOVA groups must be non-empty")
    n = sum(a.size for a in arrays)
    k = len(arrays)
    if n <= k:
        raise EmptyInput("ANOVA needs more observations than groups")
    grand = np.concatenate(arrays).mean()
    ssb = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ssw = sum(float(np.sum((a - a.mean()) ** 2)) for a in arrays)
    df1, df2 = k - 1, n - k
    if ssb == 0.0:
        return 0.0, df1, df2
    if ssw == 0.0:
        return float("inf"), df1, df2
    return float((ssb / df1) / (ssw / df2)), df1, df2


def _voiced_segment_ids(fm: FeatureMatrix, ann: Annotation) -> np.ndarray:
    centers = fm.frame_start_times + 0.5 * fm.frame_len_sec
    edges = [seg[0] for seg in ann.segments[1:]]
    return np.searchsorted(np.asarray(edges), centers, side="right")


def true_false_distances(fm: FeatureMatrix, ann: Annotation, x: int,
                         rng: np.random.Generator) -> tuple[float, float]:
    """Symmetric KL over x voiced frames per side at the annotated change
    versus at a random position whose window stays inside one segment.

    Raises InsufficientMargin when either window does not fit."""
    if len(ann.change_points) != 1:
        raise ValueError("study utterances must have exactly one change point")
    T = fm.n_frames
    change = ann.change_points[0]
    centers = fm.frame_start_times + 0.5 * fm.frame_len_sec
    p = int(np.argmin(np.abs(centers - change)))
    if p < x or p + x > T:
        raise InsufficientMargin(f"{ann.utt_id}: change too close to an edge for x={x}")
    true_d = symmetric_kl(fit_diag_gaussian(fm.rows[p - x:p]),
                          fit_diag_gaussian(fm.rows[p:p + x]))
    seg_ids = _voiced_segment_ids(fm, ann)
    qs = np.arange(x, T - x + 1)
    uniform = seg_ids[qs - x] == seg_ids[qs + x - 1]
    candidates = qs[uniform]
    if candidates.size == 0:
        raise InsufficientMargin(f"{ann.utt_id}: no single-segment window for x={x}")
    q = int(candidates[rng.integers(candidates.size)])
    false_d = symmetric_kl(fit_diag_gaussian(fm.rows[q - x:q]),
                           fit_diag_gaussian(fm.rows[q:q + x]))
    return true_d, false_d


@dataclass
class StudyResult:
    x: int
    f_stat: float
    true_dists: np.ndarray
    false_dists: np.ndarray
    n_skipped: int


def discrimination_study(items: list, xs: list[int], seed: int = 0) -> list[StudyResult]:
    """Distance separability across window sizes.

    items: (utt_id, voiced FeatureMatrix, Annotation) triples with exactly
    one change each. For every x the true and false distance pools are
    compared with a one-way ANOVA; utterances without room for a window
    are skipped and counted."""
    results = []
    for x in xs:
        true_pool, false_pool, skipped = [], [], 0
        for utt_id, fm, ann in items:
            rng = derive_rng(seed, utt_id, x)
            try:
                t_d, f_d = true_false_distances(fm, ann, x, rng)
            except InsufficientMargin:
                skipped += 1
                continue
            true_pool.append(t_d)
            false_pool.append(f_d)
        if len(true_pool) >= 2:
            f_stat, _, _ = anova_f([true_pool, false_pool])
        else:
            f_stat = float("nan")
        results.append(StudyResult(x, f_stat, np.asarray(true_pool),
                                   np.asarray(false_pool), skipped))
    return results


def segment_duration_stats(annotations: list[Annotation]) -> dict:
    """Per-label median and quartiles of segment durations in seconds."""
    by_label: dict[str, list] = {}
    for ann in annotations:
        for start, end, label in ann.segments:
            by_label.setdefault(label, []).append(end - start)
    out = {}
    for label in sorted(by_label):
        durs = np.asarray(by_label[label])
        q1, med, q3 = np.percentile(durs, [25, 50, 75])
        out[label] = {"n": durs.size, "q1": float(q1), "median": float(med),
                      "q3": float(q3)}
    return out
