"""Command line entry point: ``acvspec <spectrum|predict|compare|limits|lsd> --config FILE``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import ConfigError, ExperimentConfig, parse_seed_range
from .experiments import RUNNERS
from .filter_spectrum import ConditionHError, NullKMatrixError
from .lsd import StieltjesConvergenceError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acvspec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=RUNNERS[name].__doc__.splitlines()[0])
        p.add_argument("--config", required=True, help="TOML experiment config")
        seeds = p.add_mutually_exclusive_group()
        seeds.add_argument("--seed", type=int, help="run a single seed")
        seeds.add_argument("--seeds", help="seed range lo..hi (inclusive) or comma list")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads over seeds")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = ExperimentConfig.load(args.config, kind=args.command)
        overrides = {}
        if args.seed is not None:
            overrides["seeds"] = [args.seed]
        elif args.seeds is not None:
            try:
                overrides["seeds"] = parse_seed_range(args.seeds)
            except ValueError as exc:
                raise ConfigError("seeds", str(exc)) from None
        if args.out is not None:
            overrides["out"] = args.out
        config = dataclasses.replace(config, **overrides)
        summary = RUNNERS[args.command](config, threads=max(1, args.threads))
    except (ConfigError, NullKMatrixError, ConditionHError, StieltjesConvergenceError, OSError) as exc:
        print(f"acvspec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({k: summary[k] for k in ("kind", "pass") if k in summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
