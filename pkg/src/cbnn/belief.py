"""Incremental belief propagation on contractions.

Every contraction carries a two-state bayesian network: the root's state is
free and each other vertex copies its parent's state except with probability
``phi_off[u]``, after which evidence ``(kappa0[u], kappa1[u])`` weighs the
vertex's own state.  Potentials cached on the contraction's TST let a single
evidence change be absorbed in time proportional to the TST height, and let
the leaf marginal be read off one root-to-leaf TST path.

Potential layout on a TST vertex ``s`` (arrays ``pa, pb, pc, pd``):

* open ``s``: ``pa, pb = Psi_0, Psi_1``, the weight of the fragment given the
  state of the parent of ``mu[s]``;
* closed ``s``: ``pa, pb, pc, pd = Omega_00, Omega_01, Omega_10, Omega_11``,
  indexed by (state of the parent of ``mu[s]``, state of ``mup[s]``).

The root of the contraction hangs off a phantom parent through an identity
transition, which is why ``phi_off`` of the root is zero.
"""

from __future__ import annotations

from .tst import CLOSED, OPEN

#: floor applied to evidence values so the network never loses positivity
KAPPA_FLOOR = 1e-300


class BeliefAggregate:
    """TST aggregate callback computing potentials for one contraction.

    ``j`` must expose ``phi_off``, ``kappa0`` and ``kappa1`` arrays indexed by
    the contraction's local vertex ids.
    """

    __slots__ = ("j",)

    def __init__(self, j):
        self.j = j

    def recompute(self, tst, s):
        j = self.j
        lc = tst.lc[s]
        if lc == -1:
            u = tst.mu[s]
            off = j.phi_off[u]
            k0 = j.kappa0[u]
            k1 = j.kappa1[u]
            stay = 1.0 - off
            if tst.kind[s] == OPEN:
                tst.pa[s] = stay * k0 + off * k1
                tst.pb[s] = off * k0 + stay * k1
            else:
                tst.pa[s] = stay * k0
                tst.pb[s] = off * k1
                tst.pc[s] = off * k0
                tst.pd[s] = stay * k1
            return
        pa, pb, pc, pd = tst.pa, tst.pb, tst.pc, tst.pd
        c = tst.cc[s]
        rc = tst.rc[s]
        if tst.kind[s] == OPEN:
            m0 = pa[lc] * pa[rc]
            m1 = pb[lc] * pb[rc]
            pa[s] = pa[c] * m0 + pb[c] * m1
            pb[s] = pc[c] * m0 + pd[c] * m1
            return
        if tst.kind[lc] == CLOSED:
            sc, so = lc, rc
        else:
            sc, so = rc, lc
        # Omega(s) = Omega(centre) . diag(Psi(open child)) . Omega(closed child)
        a00 = pa[c] * pa[so]
        a01 = pb[c] * pb[so]
        a10 = pc[c] * pa[so]
        a11 = pd[c] * pb[so]
        b00, b01, b10, b11 = pa[sc], pb[sc], pc[sc], pd[sc]
        pa[s] = a00 * b00 + a01 * b10
        pb[s] = a00 * b01 + a01 * b11
        pc[s] = a10 * b00 + a11 * b10
        pd[s] = a10 * b01 + a11 * b11


def evidence(j, u, kappa1, kappa0=None):
    """Set the evidence of local vertex ``u`` and refresh cached potentials.

    Values below :data:`KAPPA_FLOOR` are raised to the floor.
    """
    if not kappa1 >= 0.0 or kappa1 == float("inf"):
        raise ValueError(f"evidence must be finite and nonnegative, got {kappa1!r}")
    j.kappa1[u] = kappa1 if kappa1 > KAPPA_FLOOR else KAPPA_FLOOR
    if kappa0 is not None:
        if not kappa0 >= 0.0 or kappa0 == float("inf"):
            raise ValueError(f"evidence must be finite and nonnegative, got {kappa0!r}")
        j.kappa0[u] = kappa0 if kappa0 > KAPPA_FLOOR else KAPPA_FLOOR
    j.tst.refresh_leaf(u)


def marginal(j, u):
    """Weight of all network states with leaf ``u`` in state 1, divided by 4.

    Runs the downward outside-weight recursion along the TST path from the
    root to the leaf of ``u``.  ``omega`` is the outside weight seen by a
    vertex given the state of the parent of its top vertex; for closed
    vertices ``omega_b`` is the outside weight hanging below its bottom vertex
    ``mup`` given that vertex's state.
    """
    if j.left[u] != -1:
        raise ValueError(f"marginal needs a leaf, vertex {u} is internal")
    tst = j.tst
    path = tst.path_to_root(tst.leaf(u))
    kind, lc, cc, rc = tst.kind, tst.lc, tst.cc, tst.rc
    pa, pb, pc, pd = tst.pa, tst.pb, tst.pc, tst.pd
    w0 = w1 = 1.0
    b0 = b1 = 0.0
    for k in range(len(path) - 1, 0, -1):
        s = path[k]
        nxt = path[k - 1]
        c = cc[s]
        if kind[s] == OPEN:
            if nxt == c:
                l, r = lc[s], rc[s]
                b0 = pa[l] * pa[r]
                b1 = pb[l] * pb[r]
            else:
                other = rc[s] if nxt == lc[s] else lc[s]
                g0 = w0 * pa[c] + w1 * pc[c]
                g1 = w0 * pb[c] + w1 * pd[c]
                w0 = pa[other] * g0
                w1 = pb[other] * g1
            continue
        if kind[lc[s]] == CLOSED:
            sc, so = lc[s], rc[s]
        else:
            sc, so = rc[s], lc[s]
        if nxt == c:
            h0 = pa[sc] * b0 + pb[sc] * b1
            h1 = pc[sc] * b0 + pd[sc] * b1
            b0 = pa[so] * h0
            b1 = pb[so] * h1
        elif nxt == sc:
            g0 = w0 * pa[c] + w1 * pc[c]
            g1 = w0 * pb[c] + w1 * pd[c]
            w0 = g0 * pa[so]
            w1 = g1 * pb[so]
        else:
            g0 = w0 * pa[c] + w1 * pc[c]
            g1 = w0 * pb[c] + w1 * pd[c]
            w0 = g0 * (pa[sc] * b0 + pb[sc] * b1)
            w1 = g1 * (pc[sc] * b0 + pd[sc] * b1)
    off = j.phi_off[u]
    return (w0 * off + w1 * (1.0 - off)) * j.kappa1[u] / 4.0


def marginal_by_clamping(j, u):
    """Independent O(height) evaluation of :func:`marginal`.

    Recomputes the potentials on the path from the leaf of ``u`` to the root
    with the leaf's state-0 evidence zeroed, without touching the cache.
    """
    if j.left[u] != -1:
        raise ValueError(f"marginal needs a leaf, vertex {u} is internal")
    tst = j.tst
    agg = BeliefAggregate(j)
    path = tst.path_to_root(tst.leaf(u))
    saved = {}
    k0 = j.kappa0[u]
    j.kappa0[u] = 0.0
    try:
        for s in path:
            saved[s] = (tst.pa[s], tst.pb[s], tst.pc[s], tst.pd[s])
            agg.recompute(tst, s)
        root = path[-1]
        total = tst.pa[root] + tst.pb[root]
    finally:
        j.kappa0[u] = k0
        for s, vals in saved.items():
            tst.pa[s], tst.pb[s], tst.pc[s], tst.pd[s] = vals
    return total / 4.0


def audit_potentials(j):
    """Return TST vertices whose cached potential disagrees with a fresh pass.

    A fresh bottom-up pass is computed into scratch storage; each cached value
    is compared with relative tolerance ``1e-10``.
    """
    from .tst import TernarySearchTree

    tst = j.tst
    order = tst.subtree(tst.root)
    fresh = TernarySearchTree.__new__(TernarySearchTree)
    for name in ("kind", "mu", "mup", "lc", "cc", "rc"):
        setattr(fresh, name, getattr(tst, name))
    fresh.pa = list(tst.pa)
    fresh.pb = list(tst.pb)
    fresh.pc = list(tst.pc)
    fresh.pd = list(tst.pd)
    agg = BeliefAggregate(j)
    for s in reversed(order):
        agg.recompute(fresh, s)
    bad = []
    for s in order:
        for a, b in ((tst.pa[s], fresh.pa[s]), (tst.pb[s], fresh.pb[s]),
                     (tst.pc[s], fresh.pc[s]), (tst.pd[s], fresh.pd[s])):
            if abs(a - b) > 1e-10 * max(abs(a), abs(b), 1e-300):
                bad.append(s)
                break
    return bad
