"""Synthetic and recorded environments.

An environment produces, for each trial, a context and a full loss vector;
the learner only ever sees the loss of the action it played.  Each
environment also knows its ground-truth comparator policy.
"""

from __future__ import annotations

import csv

import numpy as np

from ..metric import quantise


class ClusterEnvironment:
    """Contexts drawn from ``m`` well-separated balls with Bernoulli losses.

    Centres lie on the first axis, ``D`` apart; each trial picks a cluster
    uniformly and a point uniformly in its ball of radius ``r``.  The
    comparator plays each cluster's best action.
    """

    def __init__(self, m, r, D, K, d=1, gap=0.3, best_actions=None, means=None, rng=None):
        self.m, self.r, self.D, self.K, self.d = int(m), float(r), float(D), int(K), int(d)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.centres = np.zeros((self.m, self.d))
        self.centres[:, 0] = self.D * np.arange(self.m)
        if means is None:
            best = list(best_actions) if best_actions is not None else [i % self.K for i in range(self.m)]
            means = np.full((self.m, self.K), 0.5 + gap / 2)
            for i, a in enumerate(best):
                means[i, a] = 0.5 - gap / 2
        self.means = np.asarray(means, dtype=float)
        self.best = np.argmin(self.means, axis=1)
        self.cluster = None

    def sample(self):
        i = int(self.rng.integers(self.m))
        direction = self.rng.standard_normal(self.d)
        direction /= np.linalg.norm(direction) or 1.0
        radius = self.r * self.rng.random() ** (1.0 / self.d)
        x = self.centres[i] + radius * direction
        losses = (self.rng.random(self.K) < self.means[i]).astype(float)
        self.cluster = i
        return x, losses

    def comparator(self):
        """Best action for the context last sampled."""
        return int(self.best[self.cluster])


class GridStochasticEnvironment:
    """Uniform contexts on ``[0, 1]^d`` with a Voronoi labelling.

    The best action of a context is the index of its nearest anchor (one
    random anchor per action); contexts are quantised before the learner
    sees them.
    """

    def __init__(self, K, d=1, gap=0.3, q=None, rng=None):
        self.K, self.d, self.gap = int(K), int(d), float(gap)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.anchors = self.rng.random((self.K, self.d))
        self.q = q
        self._label = None

    def sample(self):
        z = self.rng.random(self.d)
        label = int(np.argmin(np.sum((self.anchors - z) ** 2, axis=1)))
        means = np.full(self.K, 0.5 + self.gap / 2)
        means[label] = 0.5 - self.gap / 2
        losses = (self.rng.random(self.K) < means).astype(float)
        self._label = label
        x = quantise(z, self.q) if self.q else z
        return x, losses

    def comparator(self):
        return self._label


class ReplayEnvironment:
    """Replays contexts and loss vectors from a CSV file.

    Columns named ``x0, x1, ...`` hold the context and ``l0, l1, ...`` the
    loss vector; an optional ``comparator_action`` column supplies the
    comparator (otherwise the best fixed action in hindsight is used).
    Lines starting with ``#`` are ignored.
    """

    def __init__(self, path, K):
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        except OSError as exc:
            raise OSError(f"cannot read replay file {path}: {exc}") from exc
        if not rows:
            raise ValueError(f"replay file {path} has no rows")
        xcols = sorted((c for c in rows[0] if c and c[0] == "x" and c[1:].isdigit()), key=lambda c: int(c[1:]))
        lcols = [f"l{a}" for a in range(K)]
        missing = [c for c in lcols if c not in rows[0]]
        if not xcols or missing:
            raise ValueError(f"replay file {path} needs x* columns and loss columns {lcols}")
        self.contexts = np.array([[float(r[c]) for c in xcols] for r in rows])
        self.losses = np.array([[float(r[c]) for c in lcols] for r in rows])
        if "comparator_action" in rows[0]:
            self.policy = np.array([int(r["comparator_action"]) for r in rows])
        else:
            self.policy = np.full(len(rows), int(np.argmin(self.losses.sum(axis=0))))
        self.d = self.contexts.shape[1]
        self.K = K
        self.t = 0

    def __len__(self):
        return len(self.contexts)

    def sample(self):
        if self.t >= len(self.contexts):
            raise IndexError("replay file exhausted")
        i = self.t
        self.t += 1
        return self.contexts[i].copy(), self.losses[i].copy()

    def comparator(self):
        return int(self.policy[self.t - 1])


def make_environment(cfg, rng, q=None):
    """Build the environment described by an :class:`ExperimentConfig`."""
    env = cfg.environment
    kind = env["kind"]
    if kind == "clusters":
        return ClusterEnvironment(env["m"], env["r"], env["D"], cfg.K, d=cfg.d, gap=env.get("gap", 0.3),
                                  best_actions=env.get("best_actions"), means=env.get("means"), rng=rng)
    if kind == "grid-stochastic":
        return GridStochasticEnvironment(cfg.K, d=cfg.d, gap=env.get("gap", 0.3), q=q, rng=rng)
    return ReplayEnvironment(env["path"], cfg.K)
