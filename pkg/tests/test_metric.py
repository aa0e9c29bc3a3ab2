import math

import numpy as np
import pytest

from cbnn.metric import (GridQuantiser, MetricStore, SimilarityReduction, default_params, euclidean, gamma_margin,
                         quantise, similar_trials)


def scan_nearest(points, idx, x):
    d = euclidean(points, x)
    m = d.min()
    return min(i for i, di in zip(idx, d) if di == m), m


class TestStore:
    def test_insert_size(self):
        store = MetricStore(2)
        store.insert([0.1, 0.2])
        assert len(store) == 1

    def test_duplicate_keeps_earliest(self):
        store = MetricStore(1)
        store.insert([0.5], 7)
        store.insert([0.5], 3)
        store.insert([0.5], 9)
        assert len(store) == 1
        assert store.query([0.5])[1] == 3

    def test_strictly_closer(self):
        for backend in ("exact", "grid"):
            store = MetricStore(1, backend=backend)
            store.insert([0.0], 1)
            store.insert([1.0], 2)
            point, idx = store.query([0.4])
            assert point[0] == 0.0 and idx == 1

    def test_exact_hit(self):
        store = MetricStore(3, backend="grid")
        pts = np.random.default_rng(0).random((50, 3))
        for i, p in enumerate(pts):
            store.insert(p, i)
        point, idx = store.query(pts[17])
        assert idx == 17 and euclidean(point[None], pts[17])[0] == 0.0

    def test_tie_goes_to_earliest(self):
        for backend in ("exact", "grid"):
            store = MetricStore(1, backend=backend, **({"cell": 0.25} if backend == "grid" else {}))
            store.insert([1.0], 5)
            store.insert([0.0], 8)
            assert store.query([0.5])[1] == 5

    def test_empty(self):
        with pytest.raises(LookupError):
            MetricStore(2).query([0.0, 0.0])

    def test_dimension_checked(self):
        store = MetricStore(2)
        with pytest.raises(ValueError):
            store.insert([0.0, 0.0, 0.0])

    def test_bad_backend(self):
        with pytest.raises(ValueError):
            MetricStore(2, backend="cover-tree")
        with pytest.raises(ValueError):
            MetricStore(2, backend="grid", metric=euclidean)

    @pytest.mark.parametrize("backend", ["exact", "grid"])
    def test_against_scan(self, backend):
        rng = np.random.default_rng(4)
        store = MetricStore(2, backend=backend)
        pts = rng.random((10_000, 2))
        for i, p in enumerate(pts):
            if i >= 1 and i % 10 == 0:
                q = rng.random(2) * 1.2 - 0.1
                _, idx = store.query(q)
                want, dist = scan_nearest(pts[:i], range(i), q)
                assert euclidean(pts[idx][None], q)[0] == dist
                assert idx == want
            store.insert(p, i)

    def test_grid_clustered_and_far_queries(self):
        rng = np.random.default_rng(8)
        pts = np.concatenate([rng.normal(0.0, 0.01, (300, 2)), rng.normal(5.0, 0.01, (300, 2))])
        store = MetricStore(2, backend="grid")
        for i, p in enumerate(pts):
            store.insert(p, i)
        for q in rng.normal(2.5, 3.0, (200, 2)):
            assert store.query(q)[1] == scan_nearest(pts, range(len(pts)), q)[0]

    def test_custom_metric(self):
        manhattan = lambda pts, x: np.abs(np.asarray(pts) - x).sum(axis=-1)
        store = MetricStore(2, metric=manhattan)
        store.insert([0.0, 0.9], 1)
        store.insert([0.6, 0.6], 2)
        # euclidean would pick the second point, manhattan the first
        assert store.query([0.0, 0.0])[1] == 1


class TestReduction:
    def test_first_has_no_parent(self):
        red = SimilarityReduction(1)
        assert red.observe([0.3]) is None
        assert red.observe([0.9]) == 1
        assert red.observe([0.35]) == 1
        assert red.observe([0.8]) == 2

    def test_backends_agree(self):
        ctx = np.random.default_rng(2).random((500, 2))
        assert similar_trials(ctx, backend="exact") == similar_trials(ctx, backend="grid")

    def test_repeated_context_maps_to_first(self):
        ctx = np.array([[0.1], [0.5], [0.1], [0.1]])
        assert similar_trials(ctx) == {2: 1, 3: 1, 4: 1}


class TestQuantise:
    def test_rounds_to_nearest(self):
        assert quantise([0.3], 4) == pytest.approx([0.25])

    def test_grid_fixed_point(self):
        z = np.array([0.0, 0.25, 0.5, 1.0])
        assert np.array_equal(quantise(z, 4), z)

    def test_half_rounds_down(self):
        assert quantise([0.25], 2)[0] == 0.0
        assert quantise([0.75], 2)[0] == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            quantise([1.5], 4)
        with pytest.raises(ValueError):
            quantise([0.5, 0.5], 4, d=3)
        with pytest.raises(ValueError):
            GridQuantiser(0)

    def test_quantiser_object(self):
        assert GridQuantiser(10, d=2)([0.123, 0.987]) == pytest.approx([0.1, 1.0])


class TestDefaultParams:
    def test_one_dimension(self):
        assert default_params(1024, 2, 1) == (23, 1.0)

    def test_equal_horizon(self):
        assert default_params(8, 8, 3)[0] == 1

    def test_two_dimensions(self):
        q, rho = default_params(10 ** 5, 4, 2)
        assert q == 30 and rho == pytest.approx(math.sqrt(30))

    def test_exact_powers(self):
        # (T/K)^(1/(d+1)) is an integer: no spurious round-up
        assert default_params(4 * 27, 4, 2)[0] == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            default_params(2, 4, 1)


class TestMargin:
    def test_all_same_label(self):
        assert gamma_margin([0.5], lambda z: 1, [0.0, 1.0]) == math.inf

    def test_one_dimension(self):
        assert gamma_margin([0.0], ([0, 1], 0), [0.0, 1.0]) == 1.0

    def test_against_scan(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(2, 1000))
            X = rng.random((n, 2))
            labels = rng.integers(0, 3, n)
            x = rng.random(2)
            own = int(rng.integers(0, 3))
            want = min((np.linalg.norm(X[i] - x) for i in range(n) if labels[i] != own), default=math.inf)
            assert gamma_margin(x, (labels, own), X) == pytest.approx(want, rel=1e-12)
