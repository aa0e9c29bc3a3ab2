"""Contractions of the trajectory tree and the flip-probability sequence.

A contraction is a full binary tree on a subset of the trajectory tree's
vertices that keeps the root, keeps every leaf a trajectory leaf, and keeps
left and right descendants on their original sides.  Each contraction
vertex carries the flip probability ``phi[delta]`` of the edge to its parent
(``delta`` being the depth gap in the trajectory tree) and evidence values.
"""

from __future__ import annotations

from array import array

from .belief import BeliefAggregate
from .trajectory import LEFT, NEITHER, RIGHT
from .tst import TernarySearchTree


class PhiTable:
    """Lazily extended sequence ``phi_0 = 0``, ``phi_{j+1} = phi_j (1-2/T) + 1/T``.

    ``phi_j`` is the probability that a symmetric two-state chain which flips
    with probability ``1/T`` per step has flipped an odd number of times after
    ``j`` steps.
    """

    def __init__(self, T):
        if T < 2:
            raise ValueError(f"horizon must be at least 2, got {T}")
        self.T = int(T)
        self.values = [0.0]

    def phi(self, j):
        if j < 0 or j > self.T:
            raise IndexError(f"phi index {j} outside 0..{self.T}")
        vals = self.values
        if j >= len(vals):
            T = self.T
            keep = 1.0 - 1.0 / T
            flip = 1.0 / T
            last = vals[-1]
            for _ in range(len(vals), j + 1):
                last = keep * last + flip * (1.0 - last)
                vals.append(last)
        return vals[j]

    __getitem__ = phi

    def closed_form(self, j):
        return (1.0 - (1.0 - 2.0 / self.T) ** j) / 2.0


class Contraction:
    """A contraction ``J`` of a trajectory tree, with belief potentials.

    Vertices have dense *local* ids; ``zid[k]`` is the trajectory vertex of
    local vertex ``k`` and :meth:`local` maps back.  A new contraction copies
    the three-vertex starting tree (trajectory vertices 0, 1 and 2).

    Parameters
    ----------
    z : TrajectoryTree
    phi : PhiTable
    """

    def __init__(self, z, phi):
        self.z = z
        self.phi = phi
        self.zid = array("i", [0, 1, 2])
        self.parent = array("i", [-1, 0, 0])
        self.left = array("i", [1, -1, -1])
        self.right = array("i", [2, -1, -1])
        self.root = 0
        self._local = {0: 0, 1: 1, 2: 2}
        self.kappa0 = array("d", [1.0, 1.0, 1.0])
        self.kappa1 = array("d", [1.0, 1.0, 1.0])
        self.delta = array("i", [0, 0, 0])
        self.phi_off = array("d", [0.0, 0.0, 0.0])
        for k in (1, 2):
            self._set_tau(k)
        self.tst = TernarySearchTree(self, BeliefAggregate(self))

    def __len__(self):
        return len(self.zid)

    def __contains__(self, zvertex):
        return zvertex in self._local

    def local(self, zvertex):
        """Local id of a trajectory vertex (``KeyError`` if absent)."""
        return self._local[zvertex]

    def leaves(self):
        return [self.zid[k] for k in range(len(self.zid)) if self.left[k] == -1]

    def tau(self, k):
        """2x2 transition matrix (nested lists) of local vertex ``k``."""
        off = self.phi_off[k]
        return [[1.0 - off, off], [off, 1.0 - off]]

    def _set_tau(self, k):
        d = self.z.d
        delta = d[self.zid[k]] - d[self.zid[self.parent[k]]]
        self.delta[k] = delta
        self.phi_off[k] = self.phi.phi(delta)

    def insert(self, ut, target=None):
        """Add trajectory leaf ``ut`` to the contraction.

        Returns the local ids ``(k_star, k_t)`` of the new internal vertex and
        the new leaf.  ``target`` may carry a precomputed ``z.target(ut)``.
        """
        if ut in self._local:
            raise ValueError(f"trajectory vertex {ut} is already in the contraction")
        z = self.z
        if z.left[ut] != -1:
            raise ValueError(f"trajectory vertex {ut} is not a leaf")
        if target is None:
            target = z.target(ut)
        side_t = target.side
        zid = self.zid
        # descend this contraction's TST to the vertex below the insertion edge
        d = self.tst
        dlc, dcc, drc, dxi = d.lc, d.cc, d.rc, d.xi
        s = d.root
        while dlc[s] != -1:
            r = side_t(zid[dxi[s]])
            if r == LEFT:
                s = dlc[s]
            elif r == RIGHT:
                s = drc[s]
            else:
                s = dcc[s]
        khat = d.mu[s]
        uhat = zid[khat]
        # descend the trajectory TST to the branching vertex of ut and uhat
        side_h = z.target(uhat).side
        e = z.tst
        elc, ecc, erc, exi = e.lc, e.cc, e.rc, e.xi
        s = e.root
        while elc[s] != -1:
            x = exi[s]
            r = side_t(x)
            if r == side_h(x):
                if r == LEFT:
                    s = elc[s]
                elif r == RIGHT:
                    s = erc[s]
                else:
                    s = ecc[s]
            else:
                s = ecc[s]
        ustar = e.mu[s]
        # rewire
        kstar = len(zid)
        kt = kstar + 1
        kp = self.parent[khat]
        if self.left[kp] == khat:
            self.left[kp] = kstar
        else:
            self.right[kp] = kstar
        zid.extend((ustar, ut))
        self._local[ustar] = kstar
        self._local[ut] = kt
        self.parent.extend((kp, kstar))
        self.parent[khat] = kstar
        if side_h(ustar) == LEFT:
            self.left.extend((khat, -1))
            self.right.extend((kt, -1))
        else:
            self.left.extend((kt, -1))
            self.right.extend((khat, -1))
        self.kappa0.extend((1.0, 1.0))
        self.kappa1.extend((1.0, 1.0))
        self.delta.extend((0, 0))
        self.phi_off.extend((0.0, 0.0))
        for k in (kstar, khat, kt):
            self._set_tau(k)
        self.tst.splice(kstar, kt)
        return kstar, kt

    def validate(self):
        """List every violated contraction rule (empty list means valid)."""
        z = self.z
        out = []
        n = len(self.zid)
        if self.zid[self.root] != z.root:
            out.append("root of contraction is not the trajectory root")
        if len(self._local) != n:
            out.append("duplicate trajectory vertices")
        for k in range(n):
            u = self.zid[k]
            if self._local.get(u) != k:
                out.append(f"vertex {k}: local index mismatch")
            lk, rk = self.left[k], self.right[k]
            if (lk == -1) != (rk == -1):
                out.append(f"vertex {k}: not full binary")
                continue
            if lk == -1:
                if z.left[u] != -1:
                    out.append(f"vertex {k}: leaf maps to internal trajectory vertex {u}")
            else:
                if self.parent[lk] != k or self.parent[rk] != k:
                    out.append(f"vertex {k}: child parent link broken")
                if z.left[u] == -1:
                    out.append(f"vertex {k}: internal vertex maps to trajectory leaf {u}")
                elif not z.is_descendant(self.zid[lk], z.left[u]):
                    out.append(f"vertex {k}: left child not below the trajectory left child")
                elif not z.is_descendant(self.zid[rk], z.right[u]):
                    out.append(f"vertex {k}: right child not below the trajectory right child")
            if k == self.root:
                if self.phi_off[k] != 0.0:
                    out.append(f"vertex {k}: root transition is not the identity")
            else:
                delta = z.d[u] - z.d[self.zid[self.parent[k]]]
                if delta < 0:
                    out.append(f"vertex {k}: negative depth gap {delta}")
                elif self.delta[k] != delta or self.phi_off[k] != self.phi.phi(delta):
                    out.append(f"vertex {k}: transition does not match depth gap {delta}")
            if not (self.kappa0[k] >= 0.0 and self.kappa1[k] >= 0.0):
                out.append(f"vertex {k}: negative evidence")
        return out


__all__ = ["PhiTable", "Contraction", "LEFT", "RIGHT", "NEITHER"]
