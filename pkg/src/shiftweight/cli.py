"""Command line entry point: run experiment configs, write CSV results."""

import argparse
import sys

import numpy as np

from .errors import ConfigError, ShiftWeightError
from .experiments import load_config, rows_to_csv, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="shiftweight",
        description="Label-shift importance weight estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config file")
    run.add_argument("config", help="path to a flat key = value config file")
    run.add_argument("--out", help="CSV output path (overrides the config)")
    run.add_argument("--seeds", help="comma-separated seed list (overrides the config)")
    run.add_argument("--quiet", action="store_true", help="suppress progress lines")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)

    seeds = None
    if args.seeds is not None:
        try:
            seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        except ValueError:
            print(f"error: bad --seeds value {args.seeds!r}", file=sys.stderr)
            return EXIT_CONFIG

    try:
        cfg = load_config(args.config, seeds_override=seeds, out_override=args.out)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        rows = run_experiment(cfg, quiet=args.quiet)
    except (ShiftWeightError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if cfg.out:
        if not args.quiet:
            print(f"wrote {len(rows)} rows to {cfg.out}", file=sys.stderr)
    else:
        sys.stdout.write(rows_to_csv(rows))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
