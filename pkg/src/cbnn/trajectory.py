"""The binarised trial tree and the subtree-membership query ``nu``.

Trials are identified by *node ids* (any hashable; the learner uses trial
indices).  The tree starts with three vertices and grows by two vertices per
trial: the leaf of the revealed similar node is pushed down and a new leaf for
the current node is attached next to it.  Vertex ids are dense integers in
creation order, so identical inputs give identical trees.
"""

from __future__ import annotations

from array import array

from .tst import CLOSED, OPEN, StructureError, TernarySearchTree

LEFT = 1
RIGHT = 2
NEITHER = 0

_SIDE_NAMES = {LEFT: "LEFT", RIGHT: "RIGHT", NEITHER: "NEITHER"}


def side_name(code):
    """Human readable name of a ``nu`` result."""
    return _SIDE_NAMES[code]


class TrajectoryTree:
    """Full binary tree ``Z`` with node map ``gamma`` and depth ``d``.

    Attributes
    ----------
    parent, left, right : array of int
        Tree links, ``-1`` for none.
    gamma : list
        Node id carried by each vertex.
    d : array of int
        Number of similarity hops from the vertex's node back to the first node.
    leaf_of_node : dict
        Maps each node id to its unique leaf.
    tst : TernarySearchTree
        Balanced decomposition used by :meth:`nu`.
    """

    def __init__(self, x1, x2):
        if x1 == x2:
            raise ValueError("the first two nodes must be distinct")
        self.parent = array("i", [-1, 0, 0])
        self.left = array("i", [1, -1, -1])
        self.right = array("i", [2, -1, -1])
        self.gamma = [x1, x1, x2]
        self.d = array("i", [0, 0, 1])
        self.root = 0
        self.leaf_of_node = {x1: 1, x2: 2}
        self.nu_visits = 0
        self.tst = TernarySearchTree(self)

    def __len__(self):
        return len(self.parent)

    @property
    def n_leaves(self):
        return len(self.leaf_of_node)

    def leaf(self, node):
        """The leaf carrying ``node`` (raises ``KeyError`` if unknown)."""
        return self.leaf_of_node[node]

    def grow(self, node, parent_node):
        """Attach ``node`` below the leaf of ``parent_node``; return its leaf.

        The old leaf ``u`` is replaced (under its parent) by a new internal
        vertex carrying ``parent_node`` whose left child is the new leaf and
        whose right child is ``u``.
        """
        if node in self.leaf_of_node:
            raise ValueError(f"node {node!r} is already in the tree")
        u = self.leaf_of_node[parent_node]
        p = self.parent[u]
        w = len(self.parent)
        x = w + 1
        self.parent.extend((p, w))
        self.left.extend((x, -1))
        self.right.extend((u, -1))
        self.gamma.append(parent_node)
        self.gamma.append(node)
        du = self.d[u]
        self.d.extend((du, du + 1))
        if self.left[p] == u:
            self.left[p] = w
        else:
            self.right[p] = w
        self.parent[u] = w
        self.leaf_of_node[node] = x
        self.tst.splice(w, x)
        return x

    # ------------------------------------------------------------------
    # subtree membership

    def nu(self, u, u2):
        """Which child subtree of ``u`` contains ``u2``.

        Returns ``LEFT`` or ``RIGHT`` if ``u2`` lies below the left or right
        child of ``u``, and ``NEITHER`` otherwise.  Answered through the TST in
        time proportional to its height.
        """
        if u == u2:
            return NEITHER
        return self.target(u2).side(u)

    def target(self, u2):
        """Precompute the TST path of ``u2`` for repeated ``nu(., u2)`` calls."""
        return _Target(self, u2)

    def is_descendant(self, a, b):
        """True if ``a`` lies in the subtree of ``b`` (walks parent links)."""
        parent = self.parent
        while a != -1:
            if a == b:
                return True
            a = parent[a]
        return False


class _Target:
    """``nu(., u2)`` for a fixed second argument.

    The root-to-leaf TST path of ``u2`` is stored once; each query climbs from
    the leaf of its first argument until it meets that path, which locates the
    least common ancestor, then runs the centre-chain process downward.
    """

    __slots__ = ("z", "u2", "path", "pos")

    def __init__(self, z, u2):
        self.z = z
        self.u2 = u2
        path = z.tst.path_to_root(z.tst.leaf(u2))
        path.reverse()
        self.path = path
        self.pos = {s: i for i, s in enumerate(path)}

    def side(self, u):
        if u == self.u2:
            return NEITHER
        z = self.z
        tst = z.tst
        par, xi, kind, lc, rc, cc = tst.par, tst.xi, tst.kind, tst.lc, tst.rc, tst.cc
        pos = self.pos
        s = tst.leaf_of[u]
        up = [s]
        while s not in pos:
            s = par[s]
            up.append(s)
        z.nu_visits += len(up)
        # s is the lca; up[-2] is the child of s above u's leaf
        star = s
        if len(up) < 2:
            raise StructureError("distinct vertices share a TST leaf")
        hat = up[-2]
        if hat != cc[star]:
            return NEITHER
        if xi[star] == u:
            other = self.path[pos[star] + 1]
            if other == lc[star]:
                return LEFT
            if other == rc[star]:
                return RIGHT
            raise StructureError("both vertices fall in the centre child of their lca")
        i = len(up) - 2
        while True:
            s = up[i]
            if kind[s] == OPEN:
                return NEITHER
            if lc[s] == -1:
                raise StructureError(f"nu reached closed TST leaf {s} without a decision")
            if xi[s] == u:
                if kind[lc[s]] == CLOSED:
                    return LEFT
                if kind[rc[s]] == CLOSED:
                    return RIGHT
            i -= 1
            if i < 0:
                raise StructureError("nu process loop exceeded the TST height")
