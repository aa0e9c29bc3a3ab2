"""Balanced ternary search trees over dynamic full binary trees.

A ternary search tree (TST) recursively splits a full binary *base* tree into
fragments.  Every TST vertex ``s`` owns a fragment of the base tree:

* an **open** vertex owns the whole subtree below ``mu[s]``;
* a **closed** vertex owns the descendants of ``mu[s]`` that are not proper
  descendants of ``mup[s]``.

An internal vertex splits its fragment at the base vertex ``xi[s]`` into a
left part (below the left child of ``xi``), a right part (below the right
child) and a centre part (everything else).  Every base vertex ends up as the
fragment of exactly one TST leaf, reachable through ``leaf_of``.

The base tree is any object exposing ``parent``, ``left``, ``right`` (indexable
sequences using ``-1`` for "none") and ``root``.  The TST stores only ids and
never copies the base tree.

Insertions follow the splice shape used by the trajectory and contraction
trees: a new internal vertex ``w`` is placed between a non-root vertex ``u``
and its parent, with a new leaf as ``w``'s other child.  Balance is kept by
weight-balanced partial rebuilds.
"""

from __future__ import annotations

import math
from array import array

OPEN = 0
CLOSED = 1

#: fraction of a fragment a child may hold before the parent is rebuilt
BALANCE = 0.75
#: constants of the asserted height bound ``HEIGHT_C1 * log2(n) + HEIGHT_C0``
HEIGHT_C1 = 4.0
HEIGHT_C0 = 4.0


class StructureError(RuntimeError):
    """Raised when a tree violates a structural precondition."""


def height_bound(n):
    """Height ceiling asserted for a TST over ``n`` base vertices."""
    return HEIGHT_C1 * math.log2(max(n, 1)) + HEIGHT_C0


class TernarySearchTree:
    """TST over a full binary base tree, with optional cached aggregates.

    Parameters
    ----------
    base : object
        The base tree (``parent``, ``left``, ``right``, ``root``).
    aggregate : object, optional
        Callback with a ``recompute(tst, s)`` method.  It is invoked bottom-up
        on every TST vertex whose fragment (or the base data behind it)
        changed, so cached per-vertex values stay consistent.
    """

    def __init__(self, base, aggregate=None):
        self.base = base
        self.aggregate = aggregate
        self.kind = array("b")
        self.mu = array("i")
        self.mup = array("i")
        self.xi = array("i")
        self.lc = array("i")
        self.cc = array("i")
        self.rc = array("i")
        self.par = array("i")
        self.size = array("i")
        self.hgt = array("i")
        # potentials: (Omega00, Omega01, Omega10, Omega11); open vertices use
        # the first two slots for (Psi0, Psi1)
        self.pa = array("d")
        self.pb = array("d")
        self.pc = array("d")
        self.pd = array("d")
        self.leaf_of = array("i")
        self.split_of = array("i")
        self._sz = []
        self.rebuilds = 0
        self.rebuilt_vertices = 0
        n = len(base.parent)
        self._grow_index(n)
        count = (3 * n - 1) // 2
        self._alloc(count)
        pool = list(range(count - 1, -1, -1))
        self.root = self._build_fragment(OPEN, base.root, -1, -1, pool)

    # ------------------------------------------------------------------
    # allocation helpers

    def _alloc(self, count):
        first = len(self.mu)
        self.kind.extend([0] * count)
        for arr in (self.mu, self.mup, self.xi, self.lc, self.cc, self.rc,
                    self.par, self.size, self.hgt):
            arr.extend([-1] * count)
        for arr in (self.pa, self.pb, self.pc, self.pd):
            arr.extend([0.0] * count)
        return first

    def _grow_index(self, n):
        short = n - len(self.leaf_of)
        if short > 0:
            self.leaf_of.extend([-1] * short)
            self.split_of.extend([-1] * short)

    @property
    def n_base(self):
        """Number of base vertices covered by the TST."""
        return self.size[self.root]

    @property
    def height(self):
        return self.hgt[self.root]

    def __len__(self):
        return len(self.mu)

    # ------------------------------------------------------------------
    # queries

    def is_leaf(self, s):
        return self.lc[s] == -1

    def leaf(self, u):
        """Return the unique TST leaf whose fragment is base vertex ``u``."""
        if u < 0 or u >= len(self.leaf_of) or self.leaf_of[u] == -1:
            raise KeyError(f"base vertex {u} is not covered by this TST")
        return self.leaf_of[u]

    def depth(self, s):
        par = self.par
        d = 0
        while par[s] != -1:
            s = par[s]
            d += 1
        return d

    def path_to_root(self, s):
        """TST vertices from ``s`` up to the root (inclusive)."""
        par = self.par
        out = [s]
        while par[s] != -1:
            s = par[s]
            out.append(s)
        return out

    def lca(self, s, s2):
        """Least common ancestor of two TST vertices."""
        par = self.par
        d1 = self.depth(s)
        d2 = self.depth(s2)
        while d1 > d2:
            s = par[s]
            d1 -= 1
        while d2 > d1:
            s2 = par[s2]
            d2 -= 1
        while s != s2:
            s = par[s]
            s2 = par[s2]
            if s == -1 or s2 == -1:
                raise StructureError("vertices do not share a root")
        return s

    def children(self, s):
        return self.lc[s], self.cc[s], self.rc[s]

    def fragment(self, s):
        """Enumerate the base vertices of the fragment owned by ``s``."""
        left, right = self.base.left, self.base.right
        stop = self.mup[s] if self.kind[s] == CLOSED else -1
        out = []
        stack = [self.mu[s]]
        while stack:
            v = stack.pop()
            out.append(v)
            if v != stop and left[v] != -1:
                stack.append(right[v])
                stack.append(left[v])
        return out

    # ------------------------------------------------------------------
    # construction by centroid splitting

    def _fragment_sizes(self, mu, stop):
        """Fill ``self._sz`` with fragment-local subtree sizes; return total."""
        left, right = self.base.left, self.base.right
        sz = self._sz
        if len(sz) < len(left):
            sz.extend([0] * (len(left) - len(sz)))
        order = []
        stack = [mu]
        while stack:
            v = stack.pop()
            order.append(v)
            if v != stop and left[v] != -1:
                stack.append(left[v])
                stack.append(right[v])
        for v in reversed(order):
            if v != stop and left[v] != -1:
                sz[v] = 1 + sz[left[v]] + sz[right[v]]
            else:
                sz[v] = 1
        return sz[mu]

    def _open_split(self, mu, n):
        left, right = self.base.left, self.base.right
        sz = self._sz
        best = -1
        best_g = n + 1
        v = mu
        while left[v] != -1:
            a, b = sz[left[v]], sz[right[v]]
            g = n - sz[v] + 1
            if a > g:
                g = a
            if b > g:
                g = b
            if g < best_g or (g == best_g and v < best):
                best, best_g = v, g
            elif g > best_g:
                break
            if a == b:
                break
            v = left[v] if a > b else right[v]
        return best

    def _closed_split(self, mu, mup, n):
        parent, left = self.base.parent, self.base.left
        sz = self._sz
        best = -1
        best_g = n + 1
        best_on = -1
        below = mup
        v = parent[mup]
        while True:
            on = below
            off = self.base.right[v] if left[v] == on else left[v]
            g = n - sz[v] + 1
            if sz[on] > g:
                g = sz[on]
            if sz[off] > g:
                g = sz[off]
            if g < best_g or (g == best_g and v < best):
                best, best_g, best_on = v, g, on
            if v == mu:
                break
            below = v
            v = parent[v]
        return best, best_on

    def _build_fragment(self, kind, mu, mup, par, pool):
        stop = mup if kind == CLOSED else -1
        n = self._fragment_sizes(mu, stop)
        return self._make(kind, mu, mup, n, par, pool)

    def _make(self, kind, mu, mup, n, par, pool):
        sid = pool.pop()
        self.kind[sid] = kind
        self.mu[sid] = mu
        self.mup[sid] = mup if kind == CLOSED else -1
        self.par[sid] = par
        self.size[sid] = n
        if n == 1:
            self.xi[sid] = -1
            self.lc[sid] = self.cc[sid] = self.rc[sid] = -1
            self.hgt[sid] = 0
            self.leaf_of[mu] = sid
            if self.aggregate is not None:
                self.aggregate.recompute(self, sid)
            return sid
        base = self.base
        sz = self._sz
        if kind == OPEN:
            x = self._open_split(mu, n)
            on = -1
        else:
            x, on = self._closed_split(mu, mup, n)
        self.xi[sid] = x
        self.split_of[x] = sid
        xl, xr = base.left[x], base.right[x]
        nl, nr = sz[xl], sz[xr]
        nc = n - sz[x] + 1
        if kind == OPEN or on == -1:
            lkind = rkind = OPEN
        elif on == xl:
            lkind, rkind = CLOSED, OPEN
        else:
            lkind, rkind = OPEN, CLOSED
        left_id = self._make(lkind, xl, mup, nl, sid, pool)
        right_id = self._make(rkind, xr, mup, nr, sid, pool)
        # the centre fragment stops at x: shrink sizes along the mu..x path
        shrink = sz[x] - 1
        v = x
        while True:
            sz[v] -= shrink
            if v == mu:
                break
            v = base.parent[v]
        centre_id = self._make(CLOSED, mu, x, nc, sid, pool)
        self.lc[sid] = left_id
        self.cc[sid] = centre_id
        self.rc[sid] = right_id
        h = self.hgt[left_id]
        if self.hgt[centre_id] > h:
            h = self.hgt[centre_id]
        if self.hgt[right_id] > h:
            h = self.hgt[right_id]
        self.hgt[sid] = h + 1
        if self.aggregate is not None:
            self.aggregate.recompute(self, sid)
        return sid

    def subtree(self, s):
        """All TST vertices in the sub-TST rooted at ``s``."""
        out = []
        stack = [s]
        lc, cc, rc = self.lc, self.cc, self.rc
        while stack:
            v = stack.pop()
            out.append(v)
            if lc[v] != -1:
                stack.append(lc[v])
                stack.append(cc[v])
                stack.append(rc[v])
        return out

    def rebuild(self, s):
        """Rebuild the sub-TST at ``s`` from its fragment by centroid splitting."""
        ids = self.subtree(s)
        ids.remove(s)
        ids.append(s)
        par = self.par[s]
        kind = self.kind[s]
        new = self._build_fragment(kind, self.mu[s], self.mup[s], par, ids)
        if new != s or ids:
            raise StructureError("rebuild did not reuse the vertex pool exactly")
        self.rebuilds += 1
        self.rebuilt_vertices += self.size[s]
        self._refresh_up(par)

    # ------------------------------------------------------------------
    # maintenance

    def _refresh_up(self, s):
        hgt, lc, cc, rc, par = self.hgt, self.lc, self.cc, self.rc, self.par
        agg = self.aggregate
        while s != -1:
            h = hgt[lc[s]]
            if hgt[cc[s]] > h:
                h = hgt[cc[s]]
            if hgt[rc[s]] > h:
                h = hgt[rc[s]]
            hgt[s] = h + 1
            if agg is not None:
                agg.recompute(self, s)
            s = par[s]

    def refresh_leaf(self, u):
        """Recompute aggregates on the path from ``leaf(u)`` to the root."""
        s = self.leaf_of[u]
        if self.aggregate is not None:
            self.aggregate.recompute(self, s)
        self._refresh_up(self.par[s])

    def _unbalanced(self, s):
        limit = BALANCE * self.size[s]
        size = self.size
        if self.kind[s] == OPEN:
            return (size[self.lc[s]] > limit or size[self.cc[s]] > limit
                    or size[self.rc[s]] > limit)
        if size[self.cc[s]] > limit:
            return True
        # the open side child of a closed vertex is a whole base subtree hanging
        # off the mu..mup path; no choice of split point can shrink it
        closed_side = self.lc[s] if self.kind[self.lc[s]] == CLOSED else self.rc[s]
        return size[closed_side] > limit

    def splice(self, w, x):
        """Update the TST after ``w`` was spliced above a non-root vertex.

        Preconditions on the base tree: ``w`` is the new parent of an existing
        vertex ``u``; ``w`` took ``u``'s old place under ``p = parent[w]``; and
        ``x`` is a fresh leaf forming ``w``'s other child.
        """
        base = self.base
        bl, br = base.left, base.right
        if bl[x] != -1 or base.parent[x] != w:
            raise StructureError("new leaf must be a childless child of the new internal vertex")
        if bl[w] == x:
            u, u_left = br[w], False
        elif br[w] == x:
            u, u_left = bl[w], True
        else:
            raise StructureError("new leaf is not a child of the new internal vertex")
        p = base.parent[w]
        if p == -1 or base.parent[u] != w:
            raise StructureError("splice shape violated")
        self._grow_index(len(base.parent))
        s0 = self.split_of[p]
        if s0 == -1:
            raise StructureError(f"parent {p} is not a split point")
        c = self.lc[s0] if bl[p] == w else self.rc[s0]
        if self.mu[c] != u:
            raise StructureError("TST does not match base tree around the splice")
        # relabel the centre chain that starts at u; it now starts at w
        lc, cc, mu = self.lc, self.cc, self.mu
        while lc[c] != -1:
            mu[c] = w
            c = cc[c]
        # c is the leaf of u: replace it by a 3-leaf vertex split at w
        q = self._alloc(3)
        centre, fresh = q + 1, q + 2
        kind = self.kind[c]
        cpar = self.par[c]
        if self.lc[cpar] == c:
            self.lc[cpar] = q
        elif self.cc[cpar] == c:
            self.cc[cpar] = q
        else:
            self.rc[cpar] = q
        self.kind[q] = kind
        self.mu[q] = w
        self.mup[q] = self.mup[c]
        self.xi[q] = w
        self.par[q] = cpar
        self.size[q] = 3
        self.hgt[q] = 1
        self.split_of[w] = q
        self.kind[centre] = CLOSED
        self.mu[centre] = self.mup[centre] = w
        self.kind[fresh] = OPEN
        self.mu[fresh] = x
        for leaf_id in (centre, fresh):
            self.par[leaf_id] = q
            self.size[leaf_id] = 1
            self.hgt[leaf_id] = 0
        self.par[c] = q
        self.leaf_of[w] = centre
        self.leaf_of[x] = fresh
        self.cc[q] = centre
        if u_left:
            self.lc[q], self.rc[q] = c, fresh
        else:
            self.lc[q], self.rc[q] = fresh, c
        # sizes grow by two along the whole path; find the highest imbalance
        path = []
        s = cpar
        size = self.size
        while s != -1:
            size[s] += 2
            path.append(s)
            s = self.par[s]
        for s in reversed(path):
            if self._unbalanced(s):
                self.rebuild(s)
                return
        agg = self.aggregate
        if agg is not None:
            agg.recompute(self, c)
            agg.recompute(self, centre)
            agg.recompute(self, fresh)
            agg.recompute(self, q)
        self._refresh_up(cpar)


def check_structure(tst, enumerate_fragments=False):
    """Replay the TST rules against the base tree; return a list of violations.

    Every vertex's kind, ``mu`` and ``mup`` are re-derived from its parent's
    split point and compared with the stored values; split points, leaf
    shapes, stored sizes and heights, parent links and the leaf index are
    checked too.  With ``enumerate_fragments`` each internal vertex's fragment
    is enumerated and checked to be partitioned by its three children (meant
    for small trees).
    """
    base = tst.base
    left, right = base.left, base.right
    n = len(base.parent)
    # euler intervals for constant-time ancestor tests in the base tree
    tin = [0] * n
    tout = [0] * n
    clock = 0
    stack = [(base.root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            tout[v] = clock
            continue
        tin[v] = clock
        clock += 1
        stack.append((v, True))
        if left[v] != -1:
            stack.append((right[v], False))
            stack.append((left[v], False))
    if clock != n:
        return [f"base tree reaches {clock} of {n} vertices"]

    def below(a, b):
        """``a`` is a descendant of ``b`` (or equal)."""
        return tin[b] <= tin[a] < tout[b]

    def subsize(v):
        return tout[v] - tin[v]

    out = []
    root = tst.root
    if tst.kind[root] != OPEN or tst.mu[root] != base.root or tst.par[root] != -1:
        out.append("root must be open, cover the base root and have no parent")
    seen_leaves = 0
    stack = [root]
    while stack:
        s = stack.pop()
        kind, mu, mup = tst.kind[s], tst.mu[s], tst.mup[s]
        if kind == CLOSED and not (below(mup, mu) and left[mup] != -1):
            out.append(f"vertex {s}: mup {mup} is not an internal descendant of mu {mu}")
            continue
        frag = subsize(mu) if kind == OPEN else subsize(mu) - subsize(mup) + 1
        if tst.size[s] != frag:
            out.append(f"vertex {s}: stored size {tst.size[s]} != fragment size {frag}")
        if tst.lc[s] == -1:
            seen_leaves += 1
            if kind == OPEN and left[mu] != -1:
                out.append(f"vertex {s}: open leaf over internal base vertex {mu}")
            if kind == CLOSED and mu != mup:
                out.append(f"vertex {s}: closed leaf with mu != mup")
            if tst.leaf_of[mu] != s:
                out.append(f"vertex {s}: leaf index of {mu} points to {tst.leaf_of[mu]}")
            if tst.hgt[s] != 0:
                out.append(f"vertex {s}: leaf height {tst.hgt[s]}")
            continue
        x = tst.xi[s]
        if left[x] == -1 or not below(x, mu):
            out.append(f"vertex {s}: split point {x} is not an internal vertex of the fragment")
            continue
        if kind == CLOSED and not (below(mup, x) and mup != x):
            out.append(f"vertex {s}: split point {x} is not on the path to mup")
            continue
        lc, cc, rc = tst.lc[s], tst.cc[s], tst.rc[s]
        expect = [(cc, CLOSED, mu, x)]
        xl, xr = left[x], right[x]
        if kind == OPEN:
            expect.append((lc, OPEN, xl, -1))
            expect.append((rc, OPEN, xr, -1))
        elif below(mup, xr):
            expect.append((lc, OPEN, xl, -1))
            expect.append((rc, CLOSED, xr, mup))
        else:
            expect.append((lc, CLOSED, xl, mup))
            expect.append((rc, OPEN, xr, -1))
        for c, ck, cmu, cmup in expect:
            if tst.par[c] != s:
                out.append(f"vertex {c}: parent link {tst.par[c]} != {s}")
            if tst.kind[c] != ck or tst.mu[c] != cmu or (ck == CLOSED and tst.mup[c] != cmup):
                out.append(f"vertex {c}: kind/mu/mup do not follow from split at {x}")
        if tst.size[s] != tst.size[lc] + tst.size[cc] + tst.size[rc]:
            out.append(f"vertex {s}: child sizes do not add up")
        if tst.hgt[s] != 1 + max(tst.hgt[lc], tst.hgt[cc], tst.hgt[rc]):
            out.append(f"vertex {s}: stored height is stale")
        if enumerate_fragments:
            whole = sorted(tst.fragment(s))
            parts = sorted(tst.fragment(lc) + tst.fragment(cc) + tst.fragment(rc))
            if whole != parts:
                out.append(f"vertex {s}: children do not partition the fragment")
        stack.extend((lc, cc, rc))
    if seen_leaves != n:
        out.append(f"{seen_leaves} TST leaves for {n} base vertices")
    if tst.height > height_bound(n):
        out.append(f"height {tst.height} exceeds bound {height_bound(n):.1f}")
    return out
