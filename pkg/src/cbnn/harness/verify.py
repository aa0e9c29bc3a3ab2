"""Property suites comparing the fast learner with the reference oracles.

Each suite returns a :class:`SuiteReport`; the ``verify`` command prints it
and exits non-zero on failure.  ``scale`` (0 < scale <= 1) shrinks the
larger suites for quick runs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from ..belief import evidence, marginal
from ..canprop import CBNN
from ..contraction import Contraction, PhiTable
from ..metric import similar_trials
from ..oracle import ExplicitWeights, Exp4Oracle, prior_mass_sums, oracle_phi, oracle_wtilde
from ..trajectory import LEFT, NEITHER, RIGHT, TrajectoryTree
from ..tst import check_structure, height_bound
from .environments import ClusterEnvironment

SUITES = ("eq4", "thmC1", "exp4", "lemmaE1", "tst-height", "nu", "phi-cluster")
FAULTS = ("kappa",)


@dataclass
class SuiteReport:
    name: str
    passed: bool = True
    cases: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def fail(self, message):
        self.passed = False
        if len(self.failures) < 50:
            self.failures.append(message)

    def lines(self):
        status = "PASS" if self.passed else "FAIL"
        out = [f"{self.name}: {status} ({self.cases} cases, worst deviation {self.worst:.3g})"]
        out += [f"  {m}" for m in self.failures]
        return out


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_parents(T, rng):
    return {t: rng.randint(1, t - 1) for t in range(2, T + 1)}


# ----------------------------------------------------------------------


def suite_mirrored_weights(seed=0, seeds=20, tol=1e-9):
    """Mirrored runs: fast vertex probabilities against literal subset weights."""
    rep = SuiteReport("eq4")
    for T in (4, 6, 8):
        for K in (2, 4):
            for s in range(seeds):
                rng = random.Random(f"eq4-{seed}-{T}-{K}-{s}")
                parents = random_parents(T, rng)
                means = [rng.random() for _ in range(K)]
                learner = CBNN(T, K, seed=rng.randrange(2 ** 32))
                oracle = ExplicitWeights(T, K, parents)
                for t in range(1, T + 1):
                    a = learner.choose_action(parents.get(t))
                    loss = float(rng.random() < means[a])
                    trace = oracle.step(t, loss, learner.eta, zetas=learner.zetas)
                    for v, th in trace["theta"].items():
                        rep.cases += 1
                        dev = _rel(learner.theta[v], th)
                        rep.worst = max(rep.worst, dev)
                        if dev > tol:
                            rep.fail(f"T={T} K={K} run={s} t={t} v={v}: fast {learner.theta[v]!r} "
                                     f"oracle {th!r}")
                    if trace["action"] != a:
                        rep.fail(f"T={T} K={K} run={s} t={t}: paths diverged")
                    learner.feedback(loss)
    return rep


def random_contraction(rng, max_t=8):
    """A contraction of a random trajectory tree with random leaf evidence.

    Returns ``(contraction, parents, T)``; ``T`` is drawn so depth gaps of up
    to 3 give distinct flip probabilities.
    """
    t = rng.randint(2, max_t)
    T = rng.choice([4, 8, 16, 64])
    T = max(T, t)
    parents = random_parents(t, rng)
    z = TrajectoryTree(1, 2)
    j = Contraction(z, PhiTable(T))
    for s in range(3, t + 1):
        z.grow(s, parents[s])
        if rng.random() < 0.75:
            j.insert(z.leaf(s))
    for k in range(len(j)):
        if j.left[k] == -1:
            evidence(j, k, rng.uniform(0.1, 10.0))
    return j, parents, T


def suite_contraction_marginals(seed=0, count=200, tol=1e-9, fault=None):
    """Leaf marginals against explicit subset sums on random contractions."""
    rep = SuiteReport("thmC1")
    rng = random.Random(seed)
    gaps = set()
    rep.extra["depth_gaps"] = gaps
    for cid in range(count):
        j, parents, T = random_contraction(rng)
        gaps.update(j.delta[k] for k in range(len(j)) if k != j.root)
        if fault == "kappa":
            # corrupt one leaf's evidence without refreshing the potentials
            k = next(k for k in range(len(j)) if j.left[k] == -1)
            j.kappa1[k] *= 1.5
        z = j.z
        nodes = list(range(1, z.n_leaves + 1))
        lam = {z.gamma[j.zid[k]]: j.kappa1[k] for k in range(len(j)) if j.left[k] == -1}
        for k in range(len(j)):
            if j.left[k] != -1:
                continue
            fast = 4.0 * marginal(j, k)
            ref = oracle_wtilde(nodes, parents, T, lam, z.gamma[j.zid[k]])
            rep.cases += 1
            dev = _rel(fast, ref)
            rep.worst = max(rep.worst, dev)
            if dev > tol:
                rep.fail(f"contraction {cid} leaf {j.zid[k]}: fast {fast!r} oracle {ref!r}")
    return rep


def suite_policy_enumeration(seed=0, seeds=10, tol=1e-9):
    """Conditional action distributions against policy-enumeration EXP4."""
    rep = SuiteReport("exp4")
    for T in (2, 3, 4, 5):
        for K in (2, 4):
            for s in range(seeds):
                rng = random.Random(f"exp4-{seed}-{T}-{K}-{s}")
                parents = random_parents(T, rng)
                means = [rng.random() for _ in range(K)]
                learner = CBNN(T, K, seed=rng.randrange(2 ** 32))
                oracle = Exp4Oracle(T, K, parents, learner.eta)
                for t in range(1, T + 1):
                    a = learner.choose_action(parents.get(t))
                    fast = learner.action_distribution()
                    ref = oracle.distribution(t)
                    dev = float(np.max(np.abs(fast - ref) / ref))
                    rep.cases += 1
                    rep.worst = max(rep.worst, dev)
                    if dev > tol:
                        rep.fail(f"T={T} K={K} run={s} t={t}: fast {np.round(fast, 6).tolist()} "
                                 f"oracle {np.round(ref, 6).tolist()}")
                    loss = float(rng.random() < means[a])
                    oracle.update(t, a, loss)
                    learner.feedback(loss)
    return rep


def suite_prior_mass(seed=0, tol=1e-12):
    """Total initial subset weight of a vertex is one half."""
    rep = SuiteReport("lemmaE1")
    rng = random.Random(seed)
    for T in range(3, 13):
        for _ in range(3):
            total = prior_mass_sums(T, random_parents(T, rng))
            rep.cases += 1
            dev = abs(total - 0.5)
            rep.worst = max(rep.worst, dev)
            if dev > tol:
                rep.fail(f"T={T}: total {total!r}")
    return rep


def suite_tst_height(seed=0, insertions=100_000, checkpoints=100):
    """Height bound after every splice; full structural check at checkpoints."""
    rep = SuiteReport("tst-height")
    rng = random.Random(seed)
    orders = {
        "random": lambda t: rng.randint(1, t - 1),
        "spine": lambda t: t - 1,
    }
    for name, pick in orders.items():
        z = TrajectoryTree(1, 2)
        last = insertions + 2
        marks = set(np.linspace(3, last, checkpoints).astype(int).tolist())
        for t in range(3, last + 1):
            z.grow(t, pick(t))
            n = len(z)
            rep.cases += 1
            h = z.tst.height
            rep.worst = max(rep.worst, h / height_bound(n))
            if h > height_bound(n):
                rep.fail(f"{name}: height {h} > {height_bound(n):.1f} at n={n}")
                break
            if t in marks:
                problems = check_structure(z.tst)
                if problems:
                    rep.fail(f"{name}: structure broken at n={n}: {problems[:3]}")
                    break
    return rep


def _nu_brute(z, u, w):
    if u == w or z.left[u] == -1:
        return NEITHER
    if z.is_descendant(w, z.left[u]):
        return LEFT
    if z.is_descendant(w, z.right[u]):
        return RIGHT
    return NEITHER


def _ancestors(z, w):
    out = set()
    while w != -1:
        out.add(w)
        w = z.parent[w]
    return out


def suite_nu(seed=0, small=512, large=10_000, samples=100_000):
    """Subtree-membership query against parent-walking, small and large trees."""
    rep = SuiteReport("nu")
    rng = random.Random(seed)
    for shape in ("random", "spine", "root"):
        z = TrajectoryTree(1, 2)
        t = 2
        while len(z) + 2 <= small:
            t += 1
            z.grow(t, {"random": rng.randint(1, t - 1), "spine": t - 1, "root": 1}[shape])
        n = len(z)
        ancestors = [_ancestors(z, w) for w in range(n)]
        for w in range(n):
            side = z.target(w).side
            anc = ancestors[w]
            for u in range(n):
                rep.cases += 1
                if u == w or z.left[u] == -1:
                    want = NEITHER
                elif z.left[u] in anc:
                    want = LEFT
                elif z.right[u] in anc:
                    want = RIGHT
                else:
                    want = NEITHER
                if side(u) != want:
                    rep.fail(f"{shape} n={n}: nu({u},{w}) mismatch")
    z = TrajectoryTree(1, 2)
    t = 2
    while len(z) + 2 <= large:
        t += 1
        z.grow(t, rng.randint(max(1, t - 50), t - 1) if rng.random() < 0.5 else rng.randint(1, t - 1))
    n = len(z)
    for _ in range(samples):
        u, w = rng.randrange(n), rng.randrange(n)
        if rng.random() < 0.5:
            # bias towards ancestor pairs, which exercise the process loop
            w = u
            for _ in range(rng.randint(1, 30)):
                if z.left[w] == -1:
                    break
                w = z.left[w] if rng.random() < 0.5 else z.right[w]
        rep.cases += 1
        if z.nu(u, w) != _nu_brute(z, u, w):
            rep.fail(f"random n={n}: nu({u},{w}) mismatch")
    return rep


def suite_phi_cluster(seed=0, seeds=10, T=2000, c=1.0):
    """Comparator complexity stays within the number of separated clusters."""
    rep = SuiteReport("phi-cluster")
    for m in range(2, 9):
        for s in range(seeds):
            r = 0.1
            D = r * (3 * c + 1) * 1.05
            env = ClusterEnvironment(m, r, D, K=4, d=2, rng=np.random.default_rng([seed, m, s]))
            contexts, policy = [], {}
            for t in range(1, T + 1):
                x, _ = env.sample()
                contexts.append(x)
                policy[t] = env.comparator()
            parents = similar_trials(np.array(contexts), backend="exact")
            phi = oracle_phi(policy, parents)
            rep.cases += 1
            rep.worst = max(rep.worst, phi / m)
            if phi > m:
                rep.fail(f"m={m} seed={s}: Phi={phi} > {m}")
    return rep


def verify_suite(name, seed=0, scale=1.0, fault=None):
    """Run the named suite and return its :class:`SuiteReport`."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {SUITES}")
    if fault is not None and fault not in FAULTS:
        raise KeyError(f"unknown fault {fault!r}; choose from {FAULTS}")
    scale = min(max(float(scale), 1e-3), 1.0)
    if name == "eq4":
        return suite_mirrored_weights(seed, seeds=max(1, round(20 * scale)))
    if name == "thmC1":
        return suite_contraction_marginals(seed, count=max(1, round(200 * scale)), fault=fault)
    if name == "exp4":
        return suite_policy_enumeration(seed, seeds=max(1, round(10 * scale)))
    if name == "lemmaE1":
        return suite_prior_mass(seed)
    if name == "tst-height":
        return suite_tst_height(seed, insertions=max(100, round(100_000 * scale)),
                                checkpoints=max(2, round(100 * math.sqrt(scale))))
    if name == "nu":
        return suite_nu(seed, small=512 if scale >= 1 else 128, large=max(200, round(10_000 * scale)),
                        samples=max(100, round(100_000 * scale)))
    return suite_phi_cluster(seed, seeds=max(1, round(10 * scale)))
