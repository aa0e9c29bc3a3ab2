"""Exponential-time reference computations.

These are deliberately literal: subsets of nodes are enumerated as bitmasks
(node ``x_t`` is bit ``t - 1``) and policies as base-``K`` integers.  They
serve the test-suite and the ``verify`` command and refuse to run beyond
2**20 table entries.
"""

from __future__ import annotations

import math

import numpy as np

#: largest subset or policy table an oracle will enumerate
ENUMERATION_LIMIT = 2 ** 20


class EnumerationLimitError(ValueError):
    """The requested enumeration exceeds :data:`ENUMERATION_LIMIT` entries."""


def _check_size(count, what):
    if count > ENUMERATION_LIMIT:
        raise EnumerationLimitError(f"{what} would need {count} entries (limit {ENUMERATION_LIMIT})")


def learning_rate(T, K, rho):
    """``rho * sqrt(ln K ln T / (K T))``."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return rho * math.sqrt(math.log(K) * math.log(T) / (K * T))


# ----------------------------------------------------------------------
# policy complexity


def oracle_phi(y, n):
    """Policy complexity: one plus the number of nodes disagreeing with their parent.

    ``y`` maps nodes to actions and ``n`` maps every node except the first to
    its similar node.
    """
    return 1 + sum(1 for x, p in n.items() if y[x] != y[p])


# ----------------------------------------------------------------------
# subset weights


def _subset_bits(T):
    _check_size(2 ** T, "subset table")
    masks = np.arange(2 ** T, dtype=np.int64)
    return [((masks >> b) & 1).astype(bool) for b in range(T)]


def prior_subset_weights(T, parents):
    """Initial weight of every subset of ``{x_1..x_T}`` at one action-tree vertex.

    ``parents[t]`` is the similar trial of trial ``t`` (1-based, ``t >= 2``).
    Returns an array indexed by subset bitmask.
    """
    bits = _subset_bits(T)
    w = np.full(2 ** T, 0.25)
    for t in range(2, T + 1):
        flip = bits[t - 1] != bits[parents[t] - 1]
        w *= np.where(flip, 1.0 / T, 1.0 - 1.0 / T)
    return w


def prior_mass_sums(T, parents):
    """Total initial subset weight at a vertex (equal for every vertex)."""
    return float(prior_subset_weights(T, parents).sum())


def oracle_wtilde(nodes, parents, T, lam, x_hat):
    """Subset sum of ``wtilde`` over subsets containing ``x_hat``.

    Parameters
    ----------
    nodes : sequence
        The node set ``X`` (the first entry is the root node).
    parents : dict
        Similar node of every node except the root node.
    T : int
        Horizon entering the flip probability ``1/T``.
    lam : dict
        Evidence ``lambda'`` per node; missing nodes count as 1.
    x_hat : node
    """
    nodes = list(nodes)
    m = len(nodes)
    _check_size(2 ** m, "subset enumeration")
    index = {x: i for i, x in enumerate(nodes)}
    bits = _subset_bits(m)
    w = np.ones(2 ** m)
    for x in nodes:
        lx = lam.get(x, 1.0)
        if lx != 1.0:
            w *= np.where(bits[index[x]], lx, 1.0)
    for x, p in parents.items():
        flip = bits[index[x]] != bits[index[p]]
        w *= np.where(flip, 1.0 / T, 1.0 - 1.0 / T)
    return float(w[bits[index[x_hat]]].sum())


# ----------------------------------------------------------------------
# bayesian network on a contraction


def _assignments(m):
    _check_size(2 ** m, "assignment enumeration")
    masks = np.arange(2 ** m, dtype=np.int64)
    return [((masks >> b) & 1) for b in range(m)]


def lambda_bruteforce(j, k_hat):
    """Sum over all 0/1 labellings with ``k_hat`` in state 1 of the network weight."""
    m = len(j.zid)
    f = _assignments(m)
    w = np.ones(2 ** m)
    for k in range(m):
        fk = f[k]
        if k != j.root:
            off = j.phi_off[k]
            w *= np.where(f[j.parent[k]] == fk, 1.0 - off, off)
        w *= np.where(fk == 1, j.kappa1[k], j.kappa0[k])
    return float(w[f[k_hat] == 1].sum())


def potential_bruteforce(j, tst, s):
    """Potential of TST vertex ``s`` straight from its defining sum.

    Returns ``(Psi_0, Psi_1)`` for open vertices and
    ``(Omega_00, Omega_01, Omega_10, Omega_11)`` for closed ones.
    """
    frag = tst.fragment(s)
    top = tst.mu[s]
    m = len(frag) + 1
    f = _assignments(m)
    pos = {u: i + 1 for i, u in enumerate(frag)}
    w = np.ones(2 ** m)
    for u in frag:
        off = j.phi_off[u]
        fp = f[0] if u == top else f[pos[j.parent[u]]]
        fu = f[pos[u]]
        w *= np.where(fp == fu, 1.0 - off, off)
        w *= np.where(fu == 1, j.kappa1[u], j.kappa0[u])
    if tst.kind[s] == 0:
        return tuple(float(w[f[0] == i].sum()) for i in (0, 1))
    bottom = f[pos[tst.mup[s]]]
    return tuple(float(w[(f[0] == i) & (bottom == i2)].sum()) for i in (0, 1) for i2 in (0, 1))


# ----------------------------------------------------------------------
# literal subset-weight CANPROP


class ExplicitWeights:
    """Subset weights ``w(v, S)`` for every non-root action-tree vertex.

    Action-tree vertices use heap numbering: root 1, children ``2v`` and
    ``2v + 1``, actions ``K .. 2K - 1`` (action ``a`` is leaf ``K + a``).
    """

    def __init__(self, T, K, parents):
        if K < 2 or K & (K - 1):
            raise ValueError(f"K must be a power of two, got {K}")
        self.T = T
        self.K = K
        self.parents = dict(parents)
        base = prior_subset_weights(T, parents)
        self.w = {v: base.copy() for v in range(2, 2 * K)}
        self.bits = _subset_bits(T)

    def theta(self, v, t):
        return float(self.w[v][self.bits[t - 1]].sum())

    def sibling_totals(self):
        """``sum_S w(2v, S) + w(2v+1, S)`` for each internal vertex ``v``."""
        return {v: float(self.w[2 * v].sum() + self.w[2 * v + 1].sum()) for v in range(1, self.K)}

    def step(self, t, loss, eta, zetas=None, path=None):
        """One literal CANPROP trial.

        The descent uses the supplied uniform draws ``zetas`` (take the left
        child when ``zeta <= pi(left)``) or follows the supplied leaf ``path``.
        Returns a trace dict with ``theta``, ``pi``, ``path``, ``action`` and
        ``psi``.
        """
        K = self.K
        depth = K.bit_length() - 1
        v = 1
        theta = {}
        pi = {}
        visited = [1]
        for j in range(depth):
            lv, rv = 2 * v, 2 * v + 1
            theta[lv] = self.theta(lv, t)
            theta[rv] = self.theta(rv, t)
            zsum = theta[lv] + theta[rv]
            pi[lv] = theta[lv] / zsum
            pi[rv] = theta[rv] / zsum
            if path is not None:
                v = path[j + 1]
            elif zetas[j] <= pi[lv]:
                v = lv
            else:
                v = rv
            visited.append(v)
        pit = 1.0
        for v in visited[1:]:
            pit *= pi[v]
        psi = [0.0] * (depth + 1)
        psi[depth] = math.exp(-eta * loss / pit)
        mask = self.bits[t - 1]
        for j in range(depth, 0, -1):
            vj = visited[j]
            psi[j - 1] = 1.0 - (1.0 - psi[j]) * pi[vj]
            sib = vj ^ 1
            self.w[vj][mask] *= psi[j] / psi[j - 1]
            self.w[sib][mask] /= psi[j - 1]
        return {"theta": theta, "pi": pi, "path": visited, "action": visited[-1] - K,
                "pi_tilde": pit, "psi": psi}

    def action_distribution(self, t):
        """Exact probability of each action at trial ``t`` (products of ``pi``)."""
        K = self.K
        probs = np.ones(K)
        for a in range(K):
            v = K + a
            while v > 1:
                th = self.theta(v, t)
                probs[a] *= th / (th + self.theta(v ^ 1, t))
                v //= 2
        return probs


# ----------------------------------------------------------------------
# policy-enumeration EXP4


class Exp4Oracle:
    """EXP4 over all policies ``[K]^{x_1..x_T}`` with the switching prior.

    The prior weight of policy ``y`` is
    ``(1/K) (T(K-1))^{-Phi(y)} (1 - 1/T)^{T - 1 - Phi(y)}``.
    """

    def __init__(self, T, K, parents, eta):
        _check_size(K ** T, "policy table")
        self.T = T
        self.K = K
        self.eta = eta
        codes = np.arange(K ** T, dtype=np.int64)
        self.y = np.stack([(codes // K ** i) % K for i in range(T)])  # y[t-1] = action at x_t
        switches = np.zeros(K ** T, dtype=np.int64)
        for t in range(2, T + 1):
            switches += self.y[t - 1] != self.y[parents[t] - 1]
        phi = 1 + switches
        self.phi = phi
        self.w = (1.0 / K) * (T * (K - 1.0)) ** (-phi.astype(float)) * (1.0 - 1.0 / T) ** (T - 1.0 - phi)

    def distribution(self, t):
        p = np.bincount(self.y[t - 1], weights=self.w, minlength=self.K)
        return p / p.sum()

    def update(self, t, action, loss):
        p = np.bincount(self.y[t - 1], weights=self.w, minlength=self.K)
        lhat = loss * p.sum() / p[action]
        self.w = self.w * np.where(self.y[t - 1] == action, math.exp(-self.eta * lhat), 1.0)


def prior_factorisation_gap(T, K, parents, t):
    """Largest relative gap between marginal prior mass and the product form.

    Enumerates restrictions ``y'`` to the first ``t`` nodes, sums the prior of
    all full policies extending each, normalises, and compares with the
    normalised product of per-edge factors.
    """
    orc = Exp4Oracle(T, K, parents, eta=1.0)
    codes = np.zeros(K ** T, dtype=np.int64)
    for i in range(t):
        codes += orc.y[i] * K ** i
    mass = np.bincount(codes, weights=orc.w, minlength=K ** t)
    sub = np.arange(K ** t, dtype=np.int64)
    ys = [(sub // K ** i) % K for i in range(t)]
    prod = np.ones(K ** t)
    for s in range(2, t + 1):
        same = ys[s - 1] == ys[parents[s] - 1]
        prod *= np.where(same, 1.0 - 1.0 / T, 1.0 / (T * (K - 1.0)))
    a = mass / mass.sum()
    b = prod / prod.sum()
    return float(np.max(np.abs(a - b) / b))


# ----------------------------------------------------------------------
# subset weights by message passing over the node tree


class NodeTreeWeights:
    """Vertex probabilities ``theta_t(v)`` by direct message passing.

    A polynomial-time reference for mid-size runs: the node tree (each node
    below its similar node) is kept explicitly, every action-tree vertex keeps
    its per-node evidence, and ``theta`` runs a full two-pass sum-product
    sweep, ``O(t)`` per query.  Shares no code with the contraction machinery.
    """

    def __init__(self, T, K):
        self.T = int(T)
        self.K = int(K)
        self.children = {1: []}
        self.parent = {}
        self.evidence = {v: {} for v in range(2, 2 * self.K)}

    def add_node(self, t, parent):
        self.children[t] = []
        self.children[parent].append(t)
        self.parent[t] = parent

    def multiply(self, v, node, factor):
        lam = self.evidence[v]
        lam[node] = lam.get(node, 1.0) * factor

    def theta(self, v, t):
        lam = self.evidence[v]
        stay, flip = 1.0 - 1.0 / self.T, 1.0 / self.T
        order = [1]
        for x in order:
            order.extend(self.children[x])
        up = {}
        for x in reversed(order):
            a0, a1 = 1.0, lam.get(x, 1.0)
            for c in self.children[x]:
                c0, c1 = up[c]
                a0 *= stay * c0 + flip * c1
                a1 *= flip * c0 + stay * c1
            up[x] = (a0, a1)
        path = [t]
        while path[-1] != 1:
            path.append(self.parent[path[-1]])
        path.reverse()
        o0 = o1 = 1.0
        for x, nxt in zip(path, path[1:]):
            a0, a1 = o0, o1 * lam.get(x, 1.0)
            for c in self.children[x]:
                if c != nxt:
                    c0, c1 = up[c]
                    a0 *= stay * c0 + flip * c1
                    a1 *= flip * c0 + stay * c1
            o0, o1 = stay * a0 + flip * a1, flip * a0 + stay * a1
        return 0.25 * o1 * up[t][1]

    def absorb(self, t, path, pi, loss, eta):
        """Apply one trial's updates given the sampled path and its ``pi`` values."""
        depth = len(path) - 1
        pit = 1.0
        for v in path[1:]:
            pit *= pi[v]
        psi = math.exp(-eta * loss / pit)
        for j in range(depth, 0, -1):
            v = path[j]
            prev = 1.0 - (1.0 - psi) * pi[v]
            self.multiply(v, t, psi / prev)
            self.multiply(v ^ 1, t, 1.0 / prev)
            psi = prev
