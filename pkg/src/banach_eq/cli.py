"""Command-line interface.

    banach-eq run    --config CFG [--csv PATH] [--golden PATH] [--quantize STEP]
    banach-eq sweep  --dir DIR [--jobs N] [--out DIR]
    banach-eq verify --config CFG [--samples N]

CFG may be a file path or the name of a bundled configuration.  The
environment variable BANACH_EQ_SEED (default 42) fixes the RNG seed of all
sampled diagnostics.
"""
from __future__ import annotations

import argparse
from typing import Optional, Sequence

from . import runner
from .util import SEED_ENV_VAR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banach-eq",
        description="Extragradient and Armijo-linesearch equilibrium solvers.",
        epilog=f"Set {SEED_ENV_VAR} to fix the seed of sampled diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one configuration")
    run_p.add_argument("--config", required=True, help="config file or bundled name")
    run_p.add_argument("--csv", default=None, help="trace CSV output path")
    run_p.add_argument("--golden", default=None,
                       help="golden table (file or bundled name) to compare against")
    run_p.add_argument("--quantize", type=float, default=None,
                       help="truncate each new iterate to this grid step")

    sweep_p = sub.add_parser("sweep", help="run every config in a directory")
    sweep_p.add_argument("--dir", required=True)
    sweep_p.add_argument("--jobs", type=int, default=None)
    sweep_p.add_argument("--out", default=None, help="directory for trace CSVs")

    verify_p = sub.add_parser("verify", help="assumption checks only")
    verify_p.add_argument("--config", required=True)
    verify_p.add_argument("--samples", type=int, default=10_000)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return runner.run_file(args.config, csv_path=args.csv,
                               golden_path=args.golden, quantize=args.quantize)
    if args.command == "sweep":
        return runner.sweep_dir(args.dir, jobs=args.jobs, out=args.out)
    if args.command == "verify":
        return runner.verify_file(args.config, samples=args.samples)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
