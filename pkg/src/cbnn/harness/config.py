"""Experiment configuration: JSON schema, defaults, validation and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

ENVIRONMENTS = ("clusters", "grid-stochastic", "file-replay")
BASELINES = ("uniform-random", "best-fixed-action-hindsight", "per-cluster-optimal")


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


@dataclass
class ExperimentConfig:
    """Resolved experiment settings.

    ``environment`` is a dict whose ``kind`` selects the scenario:

    * ``clusters``: ``m`` clusters of radius ``r`` whose centres are ``D``
      apart; optional ``best_actions`` (one per cluster) and ``means``
      (``m x K`` Bernoulli loss means); otherwise the best action of cluster
      ``i`` is ``i mod K`` with mean ``0.5 - gap/2`` against ``0.5 + gap/2``.
    * ``grid-stochastic``: uniform contexts on ``[0, 1]^d`` labelled by the
      nearest of ``K`` random anchors, quantised to the grid of step ``1/q``.
    * ``file-replay``: contexts and loss vectors read from ``path`` (a trace
      written by this harness or any CSV with ``x*`` and ``l*`` columns).
    """

    environment: dict = field(default_factory=lambda: {"kind": "clusters", "m": 2, "r": 0.05,
                                                       "D": 1.0, "gap": 0.3})
    T: int = 1000
    K: int = 2
    d: int = 1
    c: float = 1.0
    rho: object = 1.0
    q: object = "auto"
    nn_backend: str = "exact"
    seed: int = 0
    output: str = "trace.csv"
    baselines: list = field(default_factory=lambda: list(BASELINES))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        cfg = cls(**copy.deepcopy(data))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def config_hash(self):
        """Short digest of every setting except ``output``, which only says where to write."""
        data = self.to_dict()
        data.pop("output")
        canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def validate(self):
        env = self.environment
        if not isinstance(env, dict) or env.get("kind") not in ENVIRONMENTS:
            raise ConfigError(f"environment.kind must be one of {ENVIRONMENTS}")
        for name in ("T", "K", "d", "seed"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be an integer")
        if self.T < 2:
            raise ConfigError("T must be at least 2")
        if self.K < 2:
            raise ConfigError("K must be at least 2")
        if self.d < 1:
            raise ConfigError("d must be at least 1")
        if not (isinstance(self.c, (int, float)) and self.c >= 1):
            raise ConfigError("c must be a number >= 1")
        if self.rho != "auto" and not (isinstance(self.rho, (int, float)) and self.rho > 0):
            raise ConfigError("rho must be a positive number or 'auto'")
        if self.q not in ("auto", None) and not (isinstance(self.q, int) and self.q >= 1):
            raise ConfigError("q must be a positive integer, 'auto' or null")
        if self.nn_backend not in ("exact", "grid"):
            raise ConfigError("nn_backend must be 'exact' or 'grid'")
        bad = [b for b in self.baselines if b not in BASELINES]
        if bad:
            raise ConfigError(f"unknown baselines {bad}; choose from {BASELINES}")
        kind = env["kind"]
        if kind in ("clusters", "grid-stochastic"):
            gap = env.get("gap", 0.3)
            if not 0.0 <= gap <= 1.0:
                raise ConfigError("gap must lie in [0, 1]")
        if kind == "clusters":
            m, r, D = env.get("m"), env.get("r"), env.get("D")
            if not isinstance(m, int) or m < 1:
                raise ConfigError("clusters.m must be a positive integer")
            if not (isinstance(r, (int, float)) and r >= 0 and isinstance(D, (int, float)) and D > 0):
                raise ConfigError("clusters.r must be >= 0 and clusters.D > 0")
            means = env.get("means")
            if means is not None:
                if len(means) != m or any(len(row) != self.K for row in means):
                    raise ConfigError("clusters.means must be an m x K table")
                if any(not 0.0 <= p <= 1.0 for row in means for p in row):
                    raise ConfigError("loss means must lie in [0, 1]")
            best = env.get("best_actions")
            if best is not None and (len(best) != m or any(not 0 <= a < self.K for a in best)):
                raise ConfigError("clusters.best_actions must list one action in 0..K-1 per cluster")
        if kind == "file-replay" and not env.get("path"):
            raise ConfigError("file-replay needs environment.path")
        if math.isnan(float(self.c)):
            raise ConfigError("c must be a number")
        return self
