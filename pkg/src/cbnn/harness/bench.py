"""Per-trial learner timing."""

from __future__ import annotations

import time

import numpy as np

from ..canprop import CBNN
from ..metric import SimilarityReduction
from .environments import GridStochasticEnvironment


def time_learner(T, K, seed=0, d=2):
    """Per-trial wall time of the learner over one run of ``T`` trials.

    Contexts are uniform on ``[0, 1]^d`` with similar trials from the exact
    grid backend; only :meth:`CBNN.choose_action` and :meth:`CBNN.feedback`
    are timed.
    """
    env = GridStochasticEnvironment(K, d=d, rng=np.random.default_rng([seed, 1]))
    reduction = SimilarityReduction(d, backend="grid")
    learner = CBNN(T, K, seed=np.random.default_rng([seed, 2]), pad=True)
    times = np.zeros(T)
    clock = time.perf_counter
    for i in range(T):
        x, lvec = env.sample()
        parent = reduction.observe(x)
        t0 = clock()
        a = learner.choose_action(parent)
        t1 = clock()
        loss = float(lvec[a])
        t2 = clock()
        learner.feedback(loss)
        times[i] = (t1 - t0) + (clock() - t2)
    return times


def summarise(times):
    """Median and 99th percentile over the final quarter of trials."""
    tail = times[len(times) - max(1, len(times) // 4):]
    return float(np.median(tail)), float(np.percentile(tail, 99))


def bench_timing(trials, K, seed=0, out=None):
    """Timing table rows ``(T, K, median_s, p99_s, total_s)``, one per ``T``.

    Writes a CSV when ``out`` is given.
    """
    rows = []
    for T in trials:
        times = time_learner(int(T), K, seed=seed)
        med, p99 = summarise(times)
        rows.append((int(T), int(K), med, p99, float(times.sum())))
    if out is not None:
        with open(out, "w") as fh:
            fh.write("T,K,median_s,p99_s,total_s\n")
            for r in rows:
                fh.write(",".join(str(v) for v in r) + "\n")
    return rows
