"""Run one experiment and write its trace.

Three files are written next to ``config.output``:

* the trace CSV: ``#`` comment lines (format tag, config hash, column list),
  a header row, one row per trial, and ``#`` footer lines with the
  comparator's policy complexity and final regrets;
* ``<output>.json``: the fully resolved configuration and a summary;
* ``<output>.timing.csv``: per-trial learner wall time.

The trace and sidecar depend only on the configuration, so reruns are
byte-identical; wall times live in the separate timing file.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..canprop import CBNN
from ..metric import SimilarityReduction, default_params
from ..oracle import oracle_phi
from .config import ExperimentConfig
from .environments import ReplayEnvironment, make_environment


@dataclass
class RunResult:
    """In-memory view of a finished run."""

    config: ExperimentConfig
    actions: np.ndarray
    losses: np.ndarray
    comparator_losses: np.ndarray
    regret: np.ndarray
    baseline_regret: dict
    parents: dict
    phi_comparator: int
    times: np.ndarray
    paths: dict = field(default_factory=dict)

    @property
    def final_regret(self):
        return float(self.regret[-1])


def resolve(cfg):
    """Return a copy of ``cfg`` with ``rho`` and ``q`` made concrete."""
    data = cfg.to_dict()
    if cfg.environment["kind"] == "file-replay":
        env = ReplayEnvironment(cfg.environment["path"], cfg.K)
        if len(env) < cfg.T:
            raise ValueError(f"replay file has {len(env)} rows, config asks for T={cfg.T}")
        data["d"] = env.d
    if data["rho"] == "auto" or data["q"] == "auto":
        q, rho = default_params(max(data["T"], data["K"]), data["K"], data["d"])
        if data["rho"] == "auto":
            data["rho"] = rho
        if data["q"] == "auto":
            data["q"] = q
    return ExperimentConfig.from_dict(data)


def _fmt(v):
    return repr(float(v))


def run_experiment(cfg, write=True):
    """Run the configured experiment; return a :class:`RunResult`.

    Parameters
    ----------
    cfg : ExperimentConfig
    write : bool
        Write trace, sidecar and timing files (otherwise run in memory).
    """
    cfg = resolve(cfg)
    T, K = cfg.T, cfg.K
    env_rng = np.random.default_rng([cfg.seed, 1])
    base_rng = np.random.default_rng([cfg.seed, 3])
    q = cfg.q if cfg.environment["kind"] == "grid-stochastic" else None
    env = make_environment(cfg, env_rng, q=q)
    learner = CBNN(T, K, rho=cfg.rho, seed=np.random.default_rng([cfg.seed, 2]), pad=True)
    reduction = SimilarityReduction(cfg.d, backend=cfg.nn_backend)

    actions = np.zeros(T, dtype=np.int64)
    losses = np.zeros(T)
    comp_actions = np.zeros(T, dtype=np.int64)
    comp_losses = np.zeros(T)
    times = np.zeros(T)
    contexts = np.zeros((T, cfg.d))
    loss_table = np.zeros((T, K))
    parents = {}
    uniform_loss = 0.0
    clock = time.perf_counter
    for i in range(T):
        x, lvec = env.sample()
        contexts[i] = x
        loss_table[i] = lvec
        comp_actions[i] = env.comparator()
        parent = reduction.observe(x)
        if parent is not None:
            parents[i + 1] = parent
        t0 = clock()
        a = learner.choose_action(parent)
        t1 = clock()
        loss = float(lvec[a])
        t2 = clock()
        learner.feedback(loss)
        t3 = clock()
        times[i] = (t1 - t0) + (t3 - t2)
        actions[i] = a
        losses[i] = loss
        comp_losses[i] = lvec[comp_actions[i]]
        uniform_loss += lvec[int(base_rng.integers(K))]
    cum = np.cumsum(losses)
    cum_comp = np.cumsum(comp_losses)
    regret = cum - cum_comp
    baseline = {}
    if "uniform-random" in cfg.baselines:
        baseline["uniform-random"] = float(uniform_loss - cum_comp[-1])
    if "best-fixed-action-hindsight" in cfg.baselines:
        baseline["best-fixed-action-hindsight"] = float(loss_table.sum(axis=0).min() - cum_comp[-1])
    if "per-cluster-optimal" in cfg.baselines:
        baseline["per-cluster-optimal"] = 0.0
    policy = {t: int(comp_actions[t - 1]) for t in range(1, T + 1)}
    phi = oracle_phi(policy, parents)
    result = RunResult(cfg, actions, losses, comp_losses, regret, baseline, parents, phi, times)
    if write:
        result.paths = write_outputs(result, contexts, loss_table, comp_actions)
    return result


def write_outputs(result, contexts, loss_table, comp_actions):
    cfg = result.config
    out = cfg.output
    folder = os.path.dirname(out)
    if folder:
        os.makedirs(folder, exist_ok=True)
    T, K, d = cfg.T, cfg.K, cfg.d
    columns = (["t"] + [f"x{i}" for i in range(d)]
               + ["parent", "action", "loss", "cum_loss", "comparator_action", "comparator_loss",
                  "cum_comparator_loss", "regret"] + [f"l{a}" for a in range(K)])
    cum = np.cumsum(result.losses)
    cum_comp = np.cumsum(result.comparator_losses)
    lines = ["# cbnn-trace v1", f"# config_hash: {cfg.config_hash()}", "# columns: " + ",".join(columns),
             ",".join(columns)]
    for i in range(T):
        t = i + 1
        row = [str(t)] + [_fmt(v) for v in contexts[i]]
        row += [str(result.parents.get(t, "")), str(int(result.actions[i])), _fmt(result.losses[i]),
                _fmt(cum[i]), str(int(comp_actions[i])), _fmt(result.comparator_losses[i]), _fmt(cum_comp[i]),
                _fmt(cum[i] - cum_comp[i])]
        row += [_fmt(v) for v in loss_table[i]]
        lines.append(",".join(row))
    lines.append(f"# phi_comparator: {result.phi_comparator}")
    lines.append(f"# final_regret: {_fmt(result.final_regret)}")
    for name, value in sorted(result.baseline_regret.items()):
        lines.append(f"# baseline_regret[{name}]: {_fmt(value)}")
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    sidecar = out + ".json"
    summary = {"final_regret": result.final_regret, "phi_comparator": result.phi_comparator,
               "baseline_regret": result.baseline_regret}
    with open(sidecar, "w") as fh:
        json.dump({"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "summary": summary}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    timing = out + ".timing.csv"
    with open(timing, "w") as fh:
        fh.write("t,learner_seconds\n")
        for i, s in enumerate(result.times, start=1):
            fh.write(f"{i},{s!r}\n")
        fh.write(f"# total_seconds: {float(result.times.sum())!r}\n")
    return {"trace": out, "sidecar": sidecar, "timing": timing}


def read_trace(path):
    """Load a trace CSV into a dict of numpy columns (comment lines skipped)."""
    with open(path) as fh:
        rows = [line.rstrip("\n") for line in fh if not line.startswith("#")]
    header = rows[0].split(",")
    cols = {h: [] for h in header}
    for line in rows[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(v)
    out = {}
    for h, vals in cols.items():
        if h == "parent":
            out[h] = np.array([int(v) if v else 0 for v in vals])
        elif h in ("t", "action", "comparator_action"):
            out[h] = np.array([int(v) for v in vals])
        else:
            out[h] = np.array([float(v) for v in vals])
    return out
