"""Command-line front end for the sweep harness."""

from __future__ import annotations

import argparse
import sys

from .harness import DEFAULT_GRIDS, SweepSpec, run_sweep, write_csv
from .oracle import DEFAULT_BUDGET
from .scenario import ScenarioConfig, load_config

_SWEEP_ALIASES = {"p_f": "p_f", "bt": "bt_target", "K": "K"}


def _parse_values(variable: str, raw: str | None):
    if raw is None:
        return DEFAULT_GRIDS[variable]
    parts = [p for p in raw.split(",") if p.strip()]
    if variable == "K":
        return tuple(int(p) for p in parts)
    return tuple(float(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="green-noma")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo sweep and write CSV")
    run.add_argument("--config", help="flat key=value scenario file (defaults used if omitted)")
    run.add_argument("--sweep", required=True, choices=sorted(_SWEEP_ALIASES))
    run.add_argument("--values", help="comma-separated grid (default: built-in grid)")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--algos", default="green_ai,greedy", help="comma-separated algorithms")
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        base = load_config(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            import dataclasses

            base = dataclasses.replace(base, seed=args.seed)
        variable = _SWEEP_ALIASES[args.sweep]
        spec = SweepSpec(
            variable=variable,
            values=_parse_values(variable, args.values),
            trials=args.trials,
            base=base,
            algorithms=tuple(a.strip() for a in args.algos.split(",") if a.strip()),
            budget=args.budget,
        )
        result = run_sweep(spec, workers=args.workers)
        write_csv(result, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
