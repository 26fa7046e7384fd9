"""`sweep`: checkpoints x variations x seeds, written as one results table."""
import argparse
import itertools
from pathlib import Path

from pydantic import ValidationError

from app.commands.common import FORCE_SCALES, output_root
from app.core.config import get_settings
from app.core.errors import EXIT_OK, ConfigurationError, UsageError
from app.schemas.base import ConfigModel, describe_validation_error
from app.schemas.results import ResultsRow
from app.schemas.sweep import SweepSpec
from app.schemas.task import ForceScale, Geometry
from app.schemas.world import GeometryProfile
from app.services.analysis import format_pivot
from app.services.sweep import run_sweep
from app.storage.config_io import read_config_data
from app.storage.tables import RESULTS_SCHEMA, write_table


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("sweep", help="evaluate checkpoints across variations")
    p.add_argument("checkpoints", type=Path, nargs="*", help="checkpoint files")
    p.add_argument("--spec", type=Path, help="sweep description (TOML)")
    p.add_argument("--force-scales", type=float, nargs="+", choices=FORCE_SCALES)
    p.add_argument("--geometries", nargs="+", choices=[g.value for g in GeometryProfile])
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--episodes", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--single-threaded", action="store_true")
    p.add_argument("--out", type=Path, help="results CSV")
    p.set_defaults(handler=run)


def _flag_variations(args: argparse.Namespace) -> list[list[ConfigModel]] | None:
    scales = [[ForceScale(scale=s)] for s in args.force_scales or []]
    shapes = [[Geometry(profile=GeometryProfile(g))] for g in args.geometries or []]
    if scales and shapes:
        return [a + b for a, b in itertools.product(scales, shapes)]
    return scales or shapes or None


def build_spec(args: argparse.Namespace) -> SweepSpec:
    data = read_config_data(args.spec) if args.spec else {}
    if args.checkpoints:
        data["checkpoints"] = [str(c) for c in args.checkpoints]
    variations = _flag_variations(args)
    if variations is not None:
        data["variations"] = [[v.model_dump() for v in cell] for cell in variations]
    if args.seeds:
        data["seeds"] = args.seeds
    if args.episodes is not None:
        data["episodes"] = args.episodes
    try:
        spec = SweepSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"sweep: {describe_validation_error(exc)}") from exc
    if spec.n_cells == 0:
        raise UsageError("empty sweep: give at least one checkpoint")
    return spec


def run(args: argparse.Namespace) -> int:
    spec = build_spec(args)
    workers = 1 if args.single_threaded else (args.workers or get_settings().max_workers)
    rows = run_sweep(spec, workers)
    out = write_table(args.out or output_root() / "sweep_results.csv", RESULTS_SCHEMA, ResultsRow, rows)
    print(format_pivot(rows, "success_rate", "Success rate (%)", scale=100.0))
    print()
    print(format_pivot(rows, "position_error_mean_m", "Position error (cm)", scale=100.0, fmt="{:.2f}"))
    print(out)
    return EXIT_OK
