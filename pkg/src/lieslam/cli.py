"""Command-line front end: run scenarios, compare CSV outputs.

Exit codes: 0 success, 2 invalid configuration or schema mismatch,
3 numerical abort inside an estimator.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .filter_basic import FilterDivergence
from .harness import FILTER_CHOICES, RunConfig, compare, load_run_config, run
from .worldsim import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lieslam",
        description="Simulate rigid-body SLAM scenarios and run the "
        "geometric observers over them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write CSV artifacts")
    p_run.add_argument("--config", required=True,
                       help="JSON run config (bundled names like square_climb.json resolve too)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's rng_seed")
    p_run.add_argument("--filter", choices=FILTER_CHOICES, default=None,
                       help="override the config's filter selection")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_run.add_argument("--runs", type=int, default=1,
                       help="run N consecutive seeds in a parallel worker pool")

    p_cmp = sub.add_parser("compare", help="column-wise deltas between two run CSVs")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    return parser


def _ensure_gains(rc: RunConfig) -> None:
    if any(n == "basic" for n in rc.filters()) and rc.gains_basic is None:
        raise ConfigError("gains.basic: required for the selected filter")
    if any(n in ("imu", "imu_quat") for n in rc.filters()) and rc.gains_imu is None:
        raise ConfigError("gains.imu: required for the selected filter")


def _seed_worker(rc: RunConfig, seed: int) -> int:
    run(rc, suffix=f"_seed{seed}", seed=seed)
    return seed


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        rc = load_run_config(args.config)
        if args.filter is not None:
            rc = replace(rc, filter_kind=args.filter)
        if args.out is not None:
            rc = replace(rc, output_dir=Path(args.out))
        if args.seed is not None:
            rc = replace(rc, world=replace(rc.world, rng_seed=args.seed))
        if args.runs < 1:
            raise ConfigError("--runs: must be >= 1")
        _ensure_gains(rc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.runs > 1:
            seeds = [rc.world.rng_seed + i for i in range(args.runs)]
            with ProcessPoolExecutor(max_workers=min(args.runs, 8)) as pool:
                for seed in pool.map(_seed_worker, [rc] * len(seeds), seeds):
                    print(f"seed {seed}: done")
            print(f"wrote {args.runs} runs to {rc.output_dir}")
            return 0
        artifacts = run(rc)
    except FilterDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for name, result in artifacts.results.items():
        final = result.reports[-1]
        print(
            f"{name}: t={final.t:g} att_dist={final.att_dist:.3e} "
            f"pos_err={final.pos_err:.3e} bias_err={final.bias_err:.3e}"
        )
    print(f"wrote artifacts to {artifacts.output_dir}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    try:
        deltas = compare(args.csv_a, args.csv_b)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for d in deltas:
        print(f"{d.column}: final_delta={d.final:.6g} max_delta={d.max:.6g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_compare(args)


if __name__ == "__main__":
    sys.exit(main())
