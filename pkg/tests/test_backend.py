"""Embedding backend: projections, PLDA, trials, and the equal error rate."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import two_class_embeddings
from switchdet.backend import (EmbeddingSet, EmbeddingTrack, PldaModel,
                               build_trials, cosine_distance, eer,
                               export_embeddings, import_embeddings,
                               length_normalize, load_lda, load_plda,
                               load_wccn, plda_score, plda_score_many,
                               save_lda, save_plda, save_wccn, train_lda,
                               train_plda, train_wccn)
from switchdet.errors import (DimMismatch, FormatError, InsufficientClasses,
                              InsufficientVectors, OneClassOnly,
                              RankDeficient, ZeroVector)


class TestVectorOps:
    def test_length_normalize_unit_rows(self, rng):
        V = rng.normal(size=(10, 4)) * 7
        N = length_normalize(V)
        assert np.allclose(np.linalg.norm(N, axis=1), 1.0)

    def test_length_normalize_zero_row(self):
        with pytest.raises(ZeroVector):
            length_normalize(np.array([[0.0, 0.0]]))

    def test_cosine_hand_values(self):
        assert cosine_distance(np.array([1.0, 0.0]),
                               np.array([0.0, 1.0])) == pytest.approx(1.0)
        assert cosine_distance(np.array([1.0, 0.0]),
                               np.array([2.0, 0.0])) == pytest.approx(0.0)
        assert cosine_distance(np.array([1.0, 0.0]),
                               np.array([-3.0, 0.0])) == pytest.approx(2.0)

    def test_cosine_errors(self):
        with pytest.raises(DimMismatch):
            cosine_distance(np.array([1.0]), np.array([1.0, 2.0]))
        with pytest.raises(ZeroVector):
            cosine_distance(np.array([0.0, 0.0]), np.array([1.0, 2.0]))


class TestLda:
    def test_recovers_separating_direction(self, rng):
        # classes separated along x, within-class scatter along y:
        # the discriminant must align with x
        a = np.column_stack([rng.normal(-4, 0.1, 200), rng.normal(0, 2, 200)])
        b = np.column_stack([rng.normal(4, 0.1, 200), rng.normal(0, 2, 200)])
        E = EmbeddingSet(np.vstack([a, b]), np.array(["a"] * 200 + ["b"] * 200))
        P = train_lda(E, 1)
        direction = P[0] / np.linalg.norm(P[0])
        assert abs(direction[0]) > 0.999

    def test_out_dim_capped_by_classes(self, rng):
        V, y = two_class_embeddings(n_per_class=30, dim=5)
        with pytest.raises(RankDeficient):
            train_lda(EmbeddingSet(V, y), 2)  # two classes allow only 1

    def test_needs_two_classes(self, rng):
        V = rng.normal(size=(20, 3))
        with pytest.raises(InsufficientClasses):
            train_lda(EmbeddingSet(V, np.array(["x"] * 20)), 1)

    def test_projection_improves_separation(self, rng):
        V, y = two_class_embeddings(n_per_class=60, dim=8, gap=2.0, seed=3)
        E = EmbeddingSet(V, y)
        P = train_lda(E, 1)
        proj = V @ P.T
        a, b = proj[y == "class0", 0], proj[y == "class1", 0]
        fisher = (a.mean() - b.mean()) ** 2 / (a.var() + b.var())
        assert fisher > 1.0

    def test_file_round_trip(self, rng, tmp_path):
        V, y = two_class_embeddings()
        P = train_lda(EmbeddingSet(V, y), 1)
        save_lda(tmp_path / "p.mat", P)
        assert np.array_equal(load_lda(tmp_path / "p.mat"), P)


class TestWccn:
    def test_whitens_average_within_class_covariance(self, rng):
        V, y = two_class_embeddings(n_per_class=300, dim=4, gap=3.0)
        E = EmbeddingSet(V, y)
        B = train_wccn(E)
        covs = [np.cov(V[y == lab].T, bias=True) for lab in ("class0", "class1")]
        W = sum(covs) / 2
        assert np.allclose(B @ W @ B.T, np.eye(4), atol=1e-8)

    def test_file_round_trip(self, rng, tmp_path):
        V, y = two_class_embeddings(dim=3)
        B = train_wccn(EmbeddingSet(V, y))
        save_wccn(tmp_path / "b.mat", B)
        assert np.array_equal(load_wccn(tmp_path / "b.mat"), B)


class TestPlda:
    def make_set(self, seed=0, n_classes=6, n_per=25, dim=5):
        r = np.random.default_rng(seed)
        centers = r.normal(size=(n_classes, dim)) * 3
        V = np.vstack([c + 0.7 * r.normal(size=(n_per, dim)) for c in centers])
        y = np.repeat([f"c{i}" for i in range(n_classes)], n_per)
        return EmbeddingSet(V, y)

    def test_loglik_trace_non_decreasing(self):
        model = train_plda(self.make_set(), n_iters=12)
        assert np.all(np.diff(model.ll_trace) >= -1e-6)

    def test_scores_separate_same_from_different(self):
        E = self.make_set(seed=1)
        model = train_plda(E, n_iters=8)
        classes = E.by_class()
        a = classes["c0"]
        b = classes["c1"]
        same = plda_score(model, a[0], a[1])
        diff = plda_score(model, a[0], b[0])
        assert same > diff

    def test_score_symmetric(self):
        E = self.make_set(seed=2)
        model = train_plda(E, n_iters=6)
        u, v = E.vectors[0], E.vectors[40]
        assert plda_score(model, u, v) == pytest.approx(
            plda_score(model, v, u), rel=1e-10)

    def test_zero_between_covariance_scores_zero(self):
        # no class variability: same and different hypotheses coincide
        model = PldaModel(mean=np.zeros(3), between_cov=np.zeros((3, 3)),
                          within_cov=np.eye(3))
        u = np.array([0.3, -0.5, 0.8])
        v = np.array([-0.1, 0.9, 0.2])
        assert plda_score(model, u, v) == pytest.approx(0.0, abs=1e-10)

    def test_batch_matches_pairwise(self):
        E = self.make_set(seed=3)
        model = train_plda(E, n_iters=5)
        U, V = E.vectors[:6], E.vectors[30:36]
        batch = plda_score_many(model, U, V)
        single = [plda_score(model, u, v) for u, v in zip(U, V)]
        assert np.allclose(batch, single, rtol=1e-10)

    def test_needs_two_classes(self, rng):
        V = rng.normal(size=(30, 4))
        with pytest.raises(InsufficientClasses):
            train_plda(EmbeddingSet(V, np.array(["only"] * 30)))

    def test_degenerate_subspace_still_trains(self, rng):
        # all vectors on a hyperplane: covariances lose a direction, the
        # conditioning cap keeps EM finite
        V, y = two_class_embeddings(n_per_class=30, dim=4, gap=2.0)
        V[:, 3] = 1.0 - V[:, :3].sum(axis=1)  # exact affine constraint
        model = train_plda(EmbeddingSet(V, y), n_iters=10)
        assert np.all(np.isfinite(model.ll_trace))

    def test_file_round_trip(self, tmp_path):
        model = train_plda(self.make_set(seed=4), n_iters=4)
        save_plda(tmp_path / "m.mat", model)
        back = load_plda(tmp_path / "m.mat")
        assert np.array_equal(back.mean, model.mean)
        assert np.array_equal(back.between_cov, model.between_cov)
        assert np.array_equal(back.within_cov, model.within_cov)
        u, v = np.full(5, 0.4), np.full(5, -0.2)
        assert plda_score(back, u, v) == pytest.approx(
            plda_score(model, u, v), rel=1e-12)


class TestTrials:
    def test_balanced_and_same_first(self):
        V, y = two_class_embeddings(n_per_class=40)
        trials = build_trials(EmbeddingSet(V, y), n_each=100, seed=0)
        flags = [t[2] for t in trials]
        assert len(trials) == 200
        assert sum(flags) == 100
        assert all(flags[:100]) and not any(flags[100:])

    def test_same_pairs_distinct_and_labels_respected(self):
        V, y = two_class_embeddings(n_per_class=40)
        trials = build_trials(EmbeddingSet(V, y), n_each=150, seed=1)
        for i, j, is_same in trials:
            assert i != j
            assert (y[i] == y[j]) == bool(is_same)

    def test_deterministic(self):
        V, y = two_class_embeddings(n_per_class=40)
        a = build_trials(EmbeddingSet(V, y), n_each=50, seed=9)
        b = build_trials(EmbeddingSet(V, y), n_each=50, seed=9)
        assert a == b

    def test_one_class_rejected(self, rng):
        V = rng.normal(size=(10, 3))
        with pytest.raises(OneClassOnly):
            build_trials(EmbeddingSet(V, np.array(["a"] * 10)), n_each=5)

    def test_too_few_vectors(self):
        V = np.eye(2)
        with pytest.raises(InsufficientVectors):
            build_trials(EmbeddingSet(V, np.array(["a", "b"])), n_each=5)


class TestEer:
    def test_pinned_quarter_case(self):
        # same-class scores {2, 3}, different-class {1, 2.5}: the convex
        # frontier crosses miss = false-alarm at 25 percent
        scores = np.array([2.0, 3.0, 1.0, 2.5])
        is_target = np.array([True, True, False, False])
        assert eer(scores, is_target) == pytest.approx(25.0)

    def test_perfect_separation_is_zero(self):
        scores = np.array([5.0, 6.0, 7.0, -1.0, -2.0, 0.0])
        is_target = np.array([1, 1, 1, 0, 0, 0], dtype=bool)
        assert eer(scores, is_target) == 0.0

    def test_shuffled_scores_near_half(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=4000)
        is_target = rng.random(4000) < 0.5
        assert eer(scores, is_target) == pytest.approx(50.0, abs=3.0)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_invariant_to_monotone_transform(self, seed):
        r = np.random.default_rng(seed)
        scores = r.normal(size=200)
        is_target = r.random(200) < 0.4
        if is_target.all() or not is_target.any():
            return
        base = eer(scores, is_target)
        warped = eer(np.exp(0.5 * scores) + 3.0, is_target)
        assert warped == pytest.approx(base, abs=1e-9)

    def test_swapped_populations_flip_hard(self):
        # targets score lower than non-targets: worse than chance
        scores = np.array([0.0, 0.1, 0.9, 1.0])
        is_target = np.array([True, True, False, False])
        assert eer(scores, is_target) >= 50.0


class TestEmbeddingFile:
    def make_track(self, rng):
        ranges = np.array([[0, 50], [50, 100], [100, 150]])
        vectors = rng.normal(size=(3, 6))
        return EmbeddingTrack(ranges, vectors)

    def test_round_trip_byte_exact(self, rng, tmp_path):
        track = self.make_track(rng)
        p1, p2 = tmp_path / "a.emb", tmp_path / "b.emb"
        export_embeddings(p1, track)
        back = import_embeddings(p1)
        assert np.array_equal(back.ranges, track.ranges)
        assert np.array_equal(back.vectors, track.vectors)
        export_embeddings(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_lookup_containment_and_nearest(self, rng):
        track = self.make_track(rng)
        assert np.array_equal(track.lookup(75), track.vectors[1])
        # before the first range: nearest center wins
        assert np.array_equal(track.lookup(-10), track.vectors[0])
        assert np.array_equal(track.lookup(500), track.vectors[2])

    def test_bad_header(self, tmp_path):
        path = tmp_path / "x.emb"
        path.write_text("NOT_A_TRACK\n")
        with pytest.raises(FormatError):
            import_embeddings(path)

    def test_end_before_start_rejected(self, tmp_path):
        path = tmp_path / "x.emb"
        path.write_text("EMB1 2\n10\t5\t0.1,0.2\n")
        with pytest.raises(FormatError):
            import_embeddings(path)
