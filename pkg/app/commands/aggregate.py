"""`aggregate`: learning curves averaged across the seeds of a run directory."""
import argparse
from pathlib import Path

from app.core.errors import EXIT_OK, UsageError
from app.schemas.results import CurveRow
from app.services.analysis import aggregate_curves
from app.services.training import METRICS_FILE
from app.storage.tables import CURVES_SCHEMA, write_table


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("aggregate", help="mean/variance learning curves across seeds")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--out", type=Path, help="curves CSV (default <run_dir>/curves.csv)")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    files = sorted(args.run_dir.glob(f"seed_*/{METRICS_FILE}"))
    if not files:
        raise UsageError(f"no seed_*/{METRICS_FILE} under {args.run_dir}")
    curves = aggregate_curves(files)
    out = write_table(args.out or args.run_dir / "curves.csv", CURVES_SCHEMA, CurveRow, curves)
    if curves:
        last = curves[-1]
        print(
            f"{len(files)} seeds, {len(curves)} iterations; final reward {last.reward_mean:.3f} "
            f"(var {last.reward_variance:.3f}), success {last.success_mean:.2f}"
        )
    print(out)
    return EXIT_OK
