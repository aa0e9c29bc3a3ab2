"""The CBNN learner.

Actions sit at the leaves of a balanced binary *action tree* (heap numbering:
root 1, children ``2v`` and ``2v + 1``, action ``a`` at vertex ``K + a``;
actions are 0-based).  Every non-root vertex owns a contraction of the
trajectory tree, created on first use.  Each trial walks one root-to-leaf
path, reading the probability of each child from its contraction's marginal,
and after the loss arrives pushes evidence back into the contractions of the
path vertices and their siblings.
"""

from __future__ import annotations

import math

import numpy as np

from .belief import KAPPA_FLOOR, evidence, marginal
from .contraction import Contraction, PhiTable
from .trajectory import TrajectoryTree


class ProtocolError(RuntimeError):
    """Trial methods were called out of order."""


class HorizonExhausted(ProtocolError):
    """More trials were requested than the horizon allows."""


class ConfigurationError(ValueError):
    """Invalid learner parameters."""


def learning_rate(T, K, rho):
    """Default learning rate ``rho * sqrt(ln K ln T / (K T))``."""
    return rho * math.sqrt(math.log(K) * math.log(T) / (K * T))


def _floor(x):
    return x if x > KAPPA_FLOOR else KAPPA_FLOOR


class CBNN:
    """Nearest-neighbour contextual bandit learner.

    Parameters
    ----------
    T : int
        Horizon (number of trials); at least 2.
    K : int
        Number of actions; a power of two unless ``pad`` is set.
    rho : float
        Learning-rate scale.
    seed : int or numpy Generator, optional
        Source of the uniform draws used for sampling.
    eta : float, optional
        Override the learning rate.
    pad : bool
        Allow any ``K >= 2`` by padding the action tree with phantom actions
        that are never played (a phantom draw resamples the path).

    Notes
    -----
    Use :meth:`choose_action` then :meth:`feedback` once per trial.  Trial
    ``t`` has node id ``t``; from the second trial on, ``choose_action``
    needs the node id of the revealed similar earlier trial.
    """

    def __init__(self, T, K, rho=1.0, seed=None, eta=None, pad=False):
        T = int(T)
        K = int(K)
        if T < 2:
            raise ConfigurationError(f"horizon T must be at least 2, got {T}")
        if K < 2:
            raise ConfigurationError(f"need at least 2 actions, got {K}")
        if not rho > 0:
            raise ConfigurationError(f"rho must be positive, got {rho}")
        width = 1 << (K - 1).bit_length()
        if width != K and not pad:
            raise ConfigurationError(f"K={K} is not a power of two (enable padding)")
        self.T = T
        self.K = K
        self.width = width
        self.depth = width.bit_length() - 1
        self.rho = float(rho)
        self.eta = learning_rate(T, width, rho) if eta is None else float(eta)
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.phi = PhiTable(T)
        self.z = None
        self.contractions = [None] * (2 * width)
        self.pending = {}
        self.t = 0
        self._open = False
        self.path = []
        self.pi = {}
        self.theta = {}
        self.zetas = []
        self.pi_tilde = None
        self._leaf_local = {}

    # ------------------------------------------------------------------
    # contractions

    def contraction(self, v):
        """Contraction of action-tree vertex ``v`` (created on first use)."""
        j = self.contractions[v]
        if j is None:
            j = Contraction(self.z, self.phi)
            k = self.pending.pop(v, None)
            if k is not None:
                evidence(j, 1, k)
            self.contractions[v] = j
        return j

    def _theta(self, v, ut, target):
        j = self.contraction(v)
        if self.t == 2:
            k = 2
        elif ut in j:
            k = j.local(ut)
        else:
            k = j.insert(ut, target)[1]
        self._leaf_local[v] = k
        return marginal(j, k)

    # ------------------------------------------------------------------
    # trial protocol

    def choose_action(self, parent=None, zetas=None):
        """Sample this trial's action.

        Parameters
        ----------
        parent : node id, optional
            The similar earlier trial (required from the second trial on).
        zetas : sequence of float, optional
            Uniform draws to use instead of the internal generator.
        """
        if self._open:
            raise ProtocolError("choose_action called twice without feedback")
        if self.t >= self.T:
            raise HorizonExhausted(f"horizon of {self.T} trials exhausted")
        t = self.t + 1
        if t == 1:
            if parent is not None:
                raise ProtocolError("the first trial has no similar trial")
        else:
            if parent is None or not (1 <= parent < t):
                raise ProtocolError(f"trial {t} needs a similar trial in 1..{t - 1}, got {parent!r}")
        self.t = t
        self._open = True
        if t == 2:
            self.z = TrajectoryTree(1, 2)
        elif t > 2:
            self.z.grow(t, parent)
        self._leaf_local = {}
        self.theta = {}
        self.pi = {}
        self.zetas = []
        draws = iter(zetas) if zetas is not None else None
        while True:
            v = self._descend(t, draws)
            if v - self.width < self.K:
                break
        self.pi_tilde = 1.0
        for v in self.path[1:]:
            self.pi_tilde *= self.pi[v]
        return self.path[-1] - self.width

    def _descend(self, t, draws):
        ut = self.z.leaf(t) if t >= 2 else None
        target = self.z.target(ut) if t >= 3 else None
        v = 1
        path = [1]
        for _ in range(self.depth):
            lv, rv = 2 * v, 2 * v + 1
            if lv not in self.pi:
                # a resampled path reuses the values computed earlier this trial
                if t == 1:
                    tl = tr = 0.25
                else:
                    tl = self._theta(lv, ut, target)
                    tr = self._theta(rv, ut, target)
                self.theta[lv] = tl
                self.theta[rv] = tr
                pl = tl / (tl + tr)
                self.pi[lv] = pl
                self.pi[rv] = 1.0 - pl
            pl = self.pi[lv]
            zeta = next(draws) if draws is not None else self.rng.random()
            self.zetas.append(zeta)
            v = lv if zeta <= pl else rv
            path.append(v)
        self.path = path
        return v

    def feedback(self, loss):
        """Absorb the loss of the action returned by :meth:`choose_action`."""
        if not self._open:
            raise ProtocolError("feedback without a pending action")
        loss = float(loss)
        if not 0.0 <= loss <= 1.0:
            raise ValueError(f"loss must lie in [0, 1], got {loss}")
        psi = _floor(math.exp(-self.eta * loss / self.pi_tilde))
        t = self.t
        path = self.path
        for jj in range(self.depth, 0, -1):
            v = path[jj]
            prev = _floor(1.0 - (1.0 - psi) * self.pi[v])
            own = psi / prev
            sib = 1.0 / prev
            if t == 1:
                self.pending[v] = own
                self.pending[v ^ 1] = sib
            else:
                evidence(self.contractions[v], self._leaf_local[v], own)
                evidence(self.contractions[v ^ 1], self._leaf_local[v ^ 1], sib)
            psi = prev
        self._open = False

    # ------------------------------------------------------------------
    # diagnostics

    def action_distribution(self):
        """Exact probability of every action at the pending trial.

        Inserts the current trial into every contraction (a no-op for the
        learner's future behaviour) so every vertex probability is available.
        Meant for verification at small sizes.
        """
        if not self._open:
            raise ProtocolError("no pending trial")
        t = self.t
        probs = np.ones(self.K)
        if t == 1:
            probs[:] = 1.0 / self.width
        else:
            ut = self.z.leaf(t)
            target = self.z.target(ut) if t >= 3 else None
            theta = {}
            for v in range(2, 2 * self.width):
                if v in self.theta:
                    theta[v] = self.theta[v]
                else:
                    theta[v] = self._theta(v, ut, target)
            for a in range(self.K):
                v = self.width + a
                while v > 1:
                    probs[a] *= theta[v] / (theta[v] + theta[v ^ 1])
                    v //= 2
        if self.K != self.width:
            probs /= probs.sum()
        return probs
