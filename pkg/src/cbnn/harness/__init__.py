"""Experiment harness: configuration, environments, runs, verification and timing."""

from .bench import bench_timing
from .config import ConfigError, ExperimentConfig
from .runner import RunResult, read_trace, run_experiment
from .verify import SUITES, verify_suite

__all__ = ["ConfigError", "ExperimentConfig", "RunResult", "SUITES", "bench_timing", "read_trace",
           "run_experiment", "verify_suite"]
