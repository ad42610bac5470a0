"""Distance contours, smoothing, adaptive thresholding, peak picking, and
the assembled detector."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import feature_stream
from switchdet.detect import (ChangePointSet, DetectorConfig, DistanceContour,
                              ModelBundle, detect_changes_from_features,
                              embedding_contour, gaussian_kl_contour,
                              pick_peaks, smooth_contour, threshold_contour)
from switchdet.errors import ExtractorMismatch, TooFewFrames
from switchdet.gaussian import (fit_diag_gaussian, map_adapt_means,
                                symmetric_kl, train_gmm_em)


class TestDetectorConfig:
    def test_derived_lengths(self):
        cfg = DetectorConfig(window=150, alpha=1.0, gamma=0.9, delta=1.3)
        assert cfg.smoothing_len == 115  # round(150 / 1.3)
        assert cfg.min_peak_distance == 135  # round(0.9 * 150)

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorConfig(window=0)
        with pytest.raises(ValueError):
            DetectorConfig(window=100, alpha=-1.0)
        with pytest.raises(ValueError):
            DetectorConfig(window=100, gamma=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(window=100, delta=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(window=100, mode="nope")


class TestKlContour:
    def test_matches_bruteforce_fit(self, rng):
        fm = feature_stream([0.0, 2.0], [80, 80], dim=3, seed=1)
        window = 30
        contour = gaussian_kl_contour(fm, window)
        # independent route: refit both windows at every position
        for k, pos in enumerate(range(window, fm.n_frames - window + 1)):
            a = fit_diag_gaussian(fm.rows[pos - window:pos])
            b = fit_diag_gaussian(fm.rows[pos:pos + window])
            assert contour.values[k] == pytest.approx(
                symmetric_kl(a, b), rel=1e-9, abs=1e-12)

    def test_start_and_length(self):
        fm = feature_stream([0.0], [100], dim=2, seed=0)
        contour = gaussian_kl_contour(fm, 40)
        assert contour.start == 40
        assert contour.values.size == 100 - 2 * 40 + 1

    def test_peak_near_true_change(self):
        fm = feature_stream([0.0, 3.0], [120, 120], dim=4, seed=2)
        contour = gaussian_kl_contour(fm, 50)
        peak_pos = contour.start + int(contour.values.argmax())
        assert abs(peak_pos - 120) <= 3

    def test_too_few_frames(self):
        fm = feature_stream([0.0], [100], dim=2, seed=0)
        with pytest.raises(TooFewFrames):
            gaussian_kl_contour(fm, 50)

    def test_nonnegative(self, rng):
        fm = feature_stream([0.0], [200], dim=3, seed=3)
        contour = gaussian_kl_contour(fm, 60)
        assert np.all(contour.values >= 0.0)


class TestSmoothing:
    def test_frozen_hand_case(self):
        # normalized 4-point Hamming window over [1,3,2,5,4] with edge
        # replication; values computed by direct dot products
        c = DistanceContour(np.array([1.0, 3.0, 2.0, 5.0, 4.0]), 10, 2)
        sm = smooth_contour(c, 4)
        expect = [1.9529411764705886, 2.547058823529412, 3.5,
                  4.358823529411766, 4.0470588235294125]
        assert np.allclose(sm.values, expect, atol=1e-12)
        assert sm.smoothed
        assert sm.start == 10

    def test_length_one_is_identity(self):
        c = DistanceContour(np.array([1.0, 2.0, 3.0]), 0, 1)
        sm = smooth_contour(c, 1)
        assert np.array_equal(sm.values, c.values)

    def test_constant_signal_unchanged(self):
        c = DistanceContour(np.full(20, 2.5), 0, 1)
        sm = smooth_contour(c, 7)
        assert np.allclose(sm.values, 2.5)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 30))
    @settings(max_examples=30, deadline=None)
    def test_never_raises_global_maximum(self, seed, length):
        r = np.random.default_rng(seed)
        c = DistanceContour(r.uniform(0, 10, 50), 0, 1)
        sm = smooth_contour(c, length)
        assert sm.values.max() <= c.values.max() + 1e-12
        assert sm.values.min() >= c.values.min() - 1e-12


class TestThreshold:
    def test_hand_case(self):
        th = threshold_contour(np.array([2.0, 4.0, 6.0, 8.0]),
                               window=2, alpha=0.5)
        # first entry uses its own value; then trailing means of the
        # available prefix capped at the window
        assert th.tolist() == [1.0, 1.0, 1.5, 2.5]

    def test_alpha_scales_linearly(self, rng):
        vals = rng.uniform(1, 5, 30)
        assert np.allclose(threshold_contour(vals, 10, 2.0),
                           2.0 * threshold_contour(vals, 10, 1.0))

    def test_window_one_is_previous_value(self):
        vals = np.array([3.0, 6.0, 1.0, 7.0])
        th = threshold_contour(vals, window=1, alpha=1.0)
        assert th.tolist() == [3.0, 3.0, 6.0, 1.0]


class TestPeakPicking:
    def test_simple_peaks(self):
        vals = np.array([0.0, 5.0, 0.0, 4.0, 0.0])
        got = pick_peaks(vals, np.zeros(5), min_distance=1)
        assert got.tolist() == [1, 3]

    def test_min_distance_keeps_taller(self):
        vals = np.array([0.0, 5.0, 0.0, 4.0, 0.0])
        got = pick_peaks(vals, np.zeros(5), min_distance=3)
        assert got.tolist() == [1]

    def test_plateau_reports_left_edge(self):
        vals = np.array([0.0, 2.0, 2.0, 2.0, 0.0])
        got = pick_peaks(vals, np.zeros(5), min_distance=1)
        assert got.tolist() == [1]

    def test_threshold_filters(self):
        vals = np.array([0.0, 5.0, 0.0, 4.0, 0.0])
        th = np.array([9.0, 4.5, 9.0, 4.5, 9.0])
        got = pick_peaks(vals, th, min_distance=1)
        assert got.tolist() == [1]

    def test_endpoints_never_peaks(self):
        vals = np.array([9.0, 1.0, 2.0, 1.0, 9.0])
        got = pick_peaks(vals, np.zeros(5), min_distance=1)
        assert got.tolist() == [2]

    def test_equal_height_prefers_earlier(self):
        vals = np.array([0.0, 5.0, 0.0, 5.0, 0.0])
        got = pick_peaks(vals, np.zeros(5), min_distance=3)
        assert got.tolist() == [1]


class TestEndToEnd:
    def test_single_change_recovered(self):
        fm = feature_stream([0.0, 2.0], [400, 400], dim=13, seed=7)
        cfg = DetectorConfig(window=150)
        cps = detect_changes_from_features(fm, cfg)
        assert len(cps) >= 1
        # hop is one second, so time equals frame index at the window
        # center; the top-scoring detection must sit at the true change
        best = cps.times_sec[int(np.argmax(cps.scores))]
        assert abs(best - 400.0) <= 20.0

    def test_single_change_exclusive_at_higher_alpha(self):
        # a stricter threshold suppresses bumps in the flat regions
        fm = feature_stream([0.0, 2.0], [400, 400], dim=13, seed=7)
        cfg = DetectorConfig(window=150, alpha=2.0)
        cps = detect_changes_from_features(fm, cfg)
        assert len(cps) == 1
        assert abs(cps.times_sec[0] - 400.0) <= 20.0

    def test_no_change_no_peaks_above_adaptive_threshold(self):
        fm = feature_stream([0.0], [900], dim=13, seed=8)
        cfg = DetectorConfig(window=150, alpha=3.0)
        cps = detect_changes_from_features(fm, cfg)
        assert len(cps) == 0

    def test_three_changes(self):
        fm = feature_stream([0.0, 2.5, 0.0, 2.5], [350, 400, 380, 360],
                            dim=13, seed=9)
        cfg = DetectorConfig(window=150)
        cps = detect_changes_from_features(fm, cfg)
        refs = [350.0, 750.0, 1130.0]
        assert len(cps) == 3
        for ref, got in zip(refs, cps.times_sec):
            assert abs(got - ref) <= 20.0

    def test_embedding_mode_requires_models(self):
        fm = feature_stream([0.0, 2.0], [400, 400], dim=13, seed=7)
        cfg = DetectorConfig(window=150, mode="embedding-cosine")
        with pytest.raises(ExtractorMismatch):
            detect_changes_from_features(fm, cfg, None)

    def test_embedding_contour_peaks_at_change(self, rng):
        fm = feature_stream([0.0, 2.0], [300, 300], dim=4, seed=11)
        ubm = train_gmm_em(fm.rows, 4, n_iters=8, seed=0)
        bundle = ModelBundle(ubm=ubm, class_models={
            "a": map_adapt_means(ubm, fm.rows[:300]),
            "b": map_adapt_means(ubm, fm.rows[300:]),
        })
        contour = embedding_contour(fm, bundle, 100, scorer="cosine")
        peak = contour.start + int(contour.values.argmax())
        assert abs(peak - 300) <= 15


class TestChangePointSet:
    def test_from_times_sorted_required(self):
        with pytest.raises(ValueError):
            ChangePointSet.from_times([2.0, 1.0])

    def test_len_and_fields(self):
        cps = ChangePointSet.from_times([1.0, 2.0], [0.5, 0.7])
        assert len(cps) == 2
        assert cps.times_sec.tolist() == [1.0, 2.0]
        assert cps.scores.tolist() == [0.5, 0.7]
        assert cps.voiced_indices.tolist() == [-1, -1]
