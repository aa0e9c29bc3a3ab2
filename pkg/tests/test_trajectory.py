import pytest

from cbnn.trajectory import LEFT, NEITHER, RIGHT, TrajectoryTree, side_name
from cbnn.tst import StructureError, check_structure


def brute_side(z, u, w):
    if u == w or z.left[u] == -1:
        return NEITHER
    if z.is_descendant(w, z.left[u]):
        return LEFT
    if z.is_descendant(w, z.right[u]):
        return RIGHT
    return NEITHER


def random_z(n_nodes, rng):
    z = TrajectoryTree(1, 2)
    for t in range(3, n_nodes + 1):
        z.grow(t, rng.randint(1, t - 1))
    return z


class TestConstruction:
    def test_two_nodes(self):
        z = TrajectoryTree("a", "b")
        assert len(z) == 3
        assert z.left[z.root] == z.leaf("a") and z.right[z.root] == z.leaf("b")
        assert z.gamma[z.root] == "a"
        assert list(z.d) == [0, 0, 1]

    def test_same_nodes_rejected(self):
        with pytest.raises(ValueError):
            TrajectoryTree(1, 1)


class TestGrow:
    def test_grow_below_first(self):
        z = TrajectoryTree(1, 2)
        x3 = z.grow(3, 1)
        up = z.left[z.root]
        assert z.gamma[up] == 1
        assert z.left[up] == x3 and z.right[up] == z.leaf(1)
        assert z.d[x3] == 1 and z.d[z.leaf(1)] == 0

    def test_grow_below_second(self):
        z = TrajectoryTree(1, 2)
        x3 = z.grow(3, 2)
        up = z.right[z.root]
        assert z.gamma[up] == 2 and z.left[up] == x3 and z.right[up] == z.leaf(2)
        assert z.d[x3] == 2

    def test_first_leaves_stay_leaves(self, rng):
        z = random_z(200, rng)
        assert z.left[1] == -1 and z.left[2] == -1
        assert z.leaf(1) == 1 and z.leaf(2) == 2
        assert z.n_leaves == 200 and len(z) == 399

    def test_duplicate_node_rejected(self):
        z = TrajectoryTree(1, 2)
        with pytest.raises(ValueError):
            z.grow(2, 1)

    def test_tst_stays_valid(self, rng):
        z = random_z(400, rng)
        assert check_structure(z.tst, enumerate_fragments=True) == []


class TestNu:
    def test_self_is_neither(self, rng):
        z = random_z(30, rng)
        for u in range(len(z)):
            assert z.nu(u, u) == NEITHER

    def test_children_of_root(self):
        z = TrajectoryTree(1, 2)
        assert z.nu(z.root, z.leaf(1)) == LEFT
        assert z.nu(z.root, z.leaf(2)) == RIGHT
        assert z.nu(z.leaf(1), z.root) == NEITHER

    def test_exhaustive_small(self, rng):
        for shape in ("random", "spine", "root"):
            z = TrajectoryTree(1, 2)
            for t in range(3, 70):
                z.grow(t, {"random": rng.randint(1, t - 1), "spine": t - 1, "root": 1}[shape])
            for w in range(len(z)):
                target = z.target(w)
                for u in range(len(z)):
                    assert target.side(u) == brute_side(z, u, w), (shape, u, w)

    def test_sampled_large(self, rng):
        z = random_z(5000, rng)
        n = len(z)
        for _ in range(5000):
            u, w = rng.randrange(n), rng.randrange(n)
            assert z.nu(u, w) == brute_side(z, u, w)

    def test_side_names(self):
        assert [side_name(c) for c in (LEFT, RIGHT, NEITHER)] == ["LEFT", "RIGHT", "NEITHER"]

    def test_corrupted_tst_detected(self, rng):
        z = random_z(50, rng)
        # break the leaf index: a closed leaf where an open one is expected
        z.tst.leaf_of[z.leaf(40)] = z.tst.leaf_of[z.root]
        with pytest.raises((StructureError, KeyError, IndexError)):
            for w in range(len(z)):
                z.nu(z.root, z.leaf(40))
                z.nu(w, z.leaf(40))
