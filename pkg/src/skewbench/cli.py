"""Command line entry point.

Usage::

    skewbench <experiment> [--config cfg.ini] [--seed N]
              [--format csv|json] [--out path] [--paper-scale]

Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .errors import ConfigError
from .experiments import EXPERIMENTS, default_config, load_config, run_experiment
from .reporting import emit


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewbench",
        description="Clock-skew estimation experiments on simulated broadcast networks.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment family to run")
    parser.add_argument("--config", help="INI config file overriding the built-in defaults")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format (default csv)")
    parser.add_argument("--out", default=None,
                        help="output path (default <experiment>.<format>)")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use full-length run durations instead of desk scale")
    return parser


def _print_summary(report) -> None:
    pooled = [row for row in report.summary if row.get("row") == "pooled"]
    if not pooled:
        return
    print(f"experiment: {report.experiment}  seed: {report.seed}")
    print(f"{'estimator':<24} {'series':<28} {'count':>7} {'mean_abs':>12} {'std':>12} {'max':>12}")
    for row in pooled:
        print(
            f"{row['estimator']:<24} {row['series_kind']:<28} {row['count']:>7d} "
            f"{row['mean_abs']:>12.4g} {row['std']:>12.4g} {row['max']:>12.4g}"
        )


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, args.experiment, args.paper_scale)
        else:
            cfg = default_config(args.experiment, args.paper_scale)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
    except ConfigError as exc:
        print(f"skewbench: config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(args.experiment, cfg)
        out_path = args.out or f"{args.experiment}.{args.format}"
        emit(report, args.format, out_path)
    except ConfigError as exc:
        print(f"skewbench: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures surface as exit code 3
        print(f"skewbench: error: {exc}", file=sys.stderr)
        return 3
    _print_summary(report)
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
