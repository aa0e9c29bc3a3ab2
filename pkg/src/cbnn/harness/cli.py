"""Command-line entry point: ``cbnn simulate | verify | bench``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import bench_timing
from .config import ConfigError, ExperimentConfig
from .runner import run_experiment
from .verify import FAULTS, SUITES, verify_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2


def _trial_list(text):
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--trials expects a comma-separated list of integers, got {text!r}")
    if not values or any(v < 2 for v in values):
        raise argparse.ArgumentTypeError("--trials values must be integers >= 2")
    return values


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="cbnn", description="Nearest-neighbour contextual bandit experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run one experiment from a JSON config")
    sim.add_argument("--config", required=True, help="path to the JSON experiment config")
    sim.add_argument("--output", help="override the config's output path")

    ver = sub.add_parser("verify", help="run a property suite against the reference oracles")
    ver.add_argument("--suite", required=True, choices=SUITES)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--scale", type=float, default=1.0, help="shrink the larger suites (0 < scale <= 1)")
    ver.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)

    ben = sub.add_parser("bench", help="per-trial learner timing")
    ben.add_argument("--trials", required=True, type=_trial_list, help="comma-separated horizons, e.g. 1024,131072")
    ben.add_argument("--actions", required=True, type=int)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--output", help="write the timing table as CSV")
    return parser


def _simulate(args):
    try:
        cfg = ExperimentConfig.from_json(args.config)
        if args.output:
            data = cfg.to_dict()
            data["output"] = args.output
            cfg = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg)
    except (OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"trace: {result.paths['trace']}")
    print(f"final regret: {result.final_regret:.6g}")
    print(f"comparator policy complexity: {result.phi_comparator}")
    for name, value in sorted(result.baseline_regret.items()):
        print(f"baseline {name}: regret {value:.6g}")
    return EXIT_OK


def _verify(args):
    if not 0 < args.scale <= 1:
        print("configuration error: --scale must lie in (0, 1]", file=sys.stderr)
        return EXIT_CONFIG
    report = verify_suite(args.suite, seed=args.seed, scale=args.scale, fault=args.inject_fault)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_VERIFY


def _bench(args):
    if args.actions < 2:
        print("configuration error: --actions must be at least 2", file=sys.stderr)
        return EXIT_CONFIG
    rows = bench_timing(args.trials, args.actions, seed=args.seed, out=args.output)
    print("T,K,median_s,p99_s,total_s")
    for T, K, med, p99, total in rows:
        print(f"{T},{K},{med:.6e},{p99:.6e},{total:.6e}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"simulate": _simulate, "verify": _verify, "bench": _bench}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
