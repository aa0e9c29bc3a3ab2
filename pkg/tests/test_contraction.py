import math

import pytest

from cbnn.contraction import Contraction, PhiTable
from cbnn.trajectory import TrajectoryTree
from cbnn.tst import check_structure


class TestPhi:
    def test_start(self):
        assert PhiTable(4).phi(0) == 0.0

    def test_small_values(self):
        phi = PhiTable(4)
        assert phi[1] == pytest.approx(0.25, rel=1e-15)
        assert phi[2] == pytest.approx(0.375, rel=1e-15)
        assert phi.closed_form(2) == pytest.approx(0.375, rel=1e-15)

    def test_matches_closed_form(self):
        phi = PhiTable(1000)
        for j in (0, 1, 7, 100, 999, 1000):
            assert phi[j] == pytest.approx(phi.closed_form(j), rel=1e-12, abs=1e-300)

    def test_bounds(self):
        phi = PhiTable(8)
        assert all(0.0 <= phi[j] < 0.5 for j in range(9))
        with pytest.raises(IndexError):
            phi[9]
        with pytest.raises(IndexError):
            phi[-1]

    def test_monotone(self):
        phi = PhiTable(16)
        vals = [phi[j] for j in range(17)]
        assert vals == sorted(vals)

    def test_horizon_check(self):
        with pytest.raises(ValueError):
            PhiTable(1)


class TestContraction:
    def test_fresh_copy(self):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(4))
        assert j.validate() == []
        assert len(j) == 3 and sorted(j.leaves()) == [1, 2]
        assert j.delta[1] == 0 and j.delta[2] == 1
        assert j.tau(1) == [[1.0, 0.0], [0.0, 1.0]]
        assert j.tau(2) == [[0.75, 0.25], [0.25, 0.75]]

    def test_corrupt_tau_reported(self):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(4))
        j.phi_off[2] = 0.1
        report = j.validate()
        assert len(report) == 1 and report[0].startswith("vertex 2")

    def test_insert_shape(self):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(8))
        x3 = z.grow(3, 1)
        kstar, kt = j.insert(x3)
        assert j.zid[kt] == x3 and j.zid[kstar] == z.parent[x3]
        assert j.left[kstar] == kt and j.right[kstar] == j.local(1)
        assert j.validate() == []
        assert check_structure(j.tst) == []

    def test_insert_skipping_vertices(self):
        # trajectory grows several times before the contraction sees a leaf
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(16))
        for t, p in ((3, 1), (4, 3), (5, 1), (6, 2)):
            z.grow(t, p)
        kstar, kt = j.insert(z.leaf(4))
        assert j.validate() == []
        assert z.gamma[j.zid[kt]] == 4
        assert j.delta[kt] == z.d[j.zid[kt]] - z.d[j.zid[kstar]]

    def test_random_inserts(self, rng):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(4096))
        for t in range(3, 1003):
            z.grow(t, rng.randint(1, t - 1))
            if rng.random() < 0.8:
                j.insert(z.leaf(t))
        assert j.validate() == []
        assert check_structure(j.tst) == []

    def test_insert_errors(self):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(4))
        with pytest.raises(ValueError):
            j.insert(1)
        with pytest.raises(ValueError):
            j.insert(0)

    def test_depth_gaps_nonnegative(self, rng):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(512))
        for t in range(3, 300):
            z.grow(t, rng.randint(1, t - 1))
            if t % 3 == 0:
                j.insert(z.leaf(t))
        assert min(j.delta) >= 0
        assert j.phi_off[j.root] == 0.0
        for k in range(len(j)):
            if k != j.root:
                assert math.isclose(j.phi_off[k], j.phi.closed_form(j.delta[k]), rel_tol=1e-12, abs_tol=0)


class TestInsertSemantics:
    def test_hand_trace_first_insert(self):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(8))
        x3 = z.grow(3, 1)
        kstar, kt = j.insert(x3)
        up = z.parent[x3]
        assert j.zid[j.left[j.root]] == up
        assert j.zid[j.left[kstar]] == x3 and j.zid[j.right[kstar]] == z.leaf(1)
        assert (j.delta[kstar], j.delta[kt], j.delta[j.local(z.leaf(1))]) == (0, 1, 0)

    def test_evidence_survives_insert(self):
        from cbnn.belief import evidence

        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(8))
        evidence(j, 1, 0.4, 2.5)
        kstar, kt = j.insert(z.grow(3, 1))
        u = j.local(1)
        assert (j.kappa1[u], j.kappa0[u]) == (0.4, 2.5)
        for k in (kstar, kt):
            assert (j.kappa0[k], j.kappa1[k]) == (1.0, 1.0)

    def test_full_insertion_reproduces_tree(self, rng):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(64))
        for t in range(3, 65):
            j.insert(z.grow(t, rng.randint(1, t - 1)))
        assert sorted(j.zid) == list(range(len(z)))
        for k in range(len(j)):
            u = j.zid[k]
            lk, rk = j.left[k], j.right[k]
            assert (z.left[u], z.right[u]) == ((-1, -1) if lk == -1 else (j.zid[lk], j.zid[rk]))

    def test_tau_rows_stochastic(self, rng):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(100))
        for t in range(3, 100):
            z.grow(t, rng.randint(1, t - 1))
            if rng.random() < 0.5:
                j.insert(z.leaf(t))
        for k in range(len(j)):
            for row in j.tau(k):
                assert abs(sum(row) - 1.0) <= 1e-12

    def test_contraction_of_later_trees(self, rng):
        z = TrajectoryTree(1, 2)
        j = Contraction(z, PhiTable(200))
        for t in range(3, 100):
            z.grow(t, rng.randint(1, t - 1))
            if t % 4 == 0:
                j.insert(z.leaf(t))
        for t in range(100, 200):
            z.grow(t, rng.randint(1, t - 1))
            if t % 25 == 0:
                assert j.validate() == []
