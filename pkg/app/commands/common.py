"""Flags and helpers shared by the subcommands."""
import argparse
from pathlib import Path

from pydantic import ValidationError

from app.core.config import get_settings
from app.core.errors import ConfigurationError, UsageError
from app.schemas.base import describe_validation_error
from app.schemas.task import ControlRate, ForceScale, Geometry, ObjectSize, SensorGap
from app.schemas.train import BaselineVariant
from app.schemas.world import GeometryProfile

FORCE_SCALES = (0.5, 1.0, 2.0)


def add_variation_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("execution variations")
    group.add_argument("--force-scale", type=float, choices=FORCE_SCALES, help="scale the commanded grasp force")
    group.add_argument("--geometry", choices=[p.value for p in GeometryProfile], help="object cross-section")
    group.add_argument("--object-size", metavar="LENGTHxTHICKNESS", help="object length and thickness in metres")
    group.add_argument("--sensor-gain", type=float, help="force sensor gain")
    group.add_argument("--sensor-bias", type=float, help="force sensor bias (N)")
    group.add_argument("--sensor-noise", type=float, help="force sensor noise std (N)")
    group.add_argument("--control-hz", type=float, help="policy control rate")


def add_checkpoint_args(parser: argparse.ArgumentParser, episodes: int) -> None:
    parser.add_argument("checkpoint", type=Path, help="checkpoint file (.cgck)")
    parser.add_argument("--episodes", type=int, default=episodes, help=f"episodes (default {episodes})")
    parser.add_argument("--seed", type=int, default=0, help="evaluation seed (default 0)")
    parser.add_argument("--variant", choices=[v.value for v in BaselineVariant], help="expected checkpoint variant")
    parser.add_argument("--out", type=Path, help="output file")


def parse_object_size(raw: str) -> ObjectSize:
    try:
        length, thickness = (float(x) for x in raw.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"--object-size expects LENGTHxTHICKNESS, got {raw!r}") from exc
    return ObjectSize(length=length, thickness=thickness)


def variations_from_args(args: argparse.Namespace) -> list:
    try:
        return _variations(args)
    except ValidationError as exc:
        raise ConfigurationError(describe_validation_error(exc, prefix="variation")) from exc


def _variations(args: argparse.Namespace) -> list:
    variations = []
    if getattr(args, "force_scale", None) is not None:
        variations.append(ForceScale(scale=args.force_scale))
    if getattr(args, "geometry", None):
        variations.append(Geometry(profile=GeometryProfile(args.geometry)))
    if getattr(args, "object_size", None):
        variations.append(parse_object_size(args.object_size))
    sensor = {
        k: v
        for k, v in (
            ("gain", getattr(args, "sensor_gain", None)),
            ("bias", getattr(args, "sensor_bias", None)),
            ("noise_std", getattr(args, "sensor_noise", None)),
        )
        if v is not None
    }
    if sensor:
        variations.append(SensorGap(**sensor))
    if getattr(args, "control_hz", None):
        variations.append(ControlRate(hz=args.control_hz))
    return variations


def check_episodes(n: int) -> int:
    if n < 0:
        raise UsageError(f"--episodes must be >= 0, got {n}")
    return n


def expected_variant(args: argparse.Namespace) -> BaselineVariant | None:
    return BaselineVariant(args.variant) if getattr(args, "variant", None) else None


def output_root() -> Path:
    return get_settings().output_root


def default_output(args: argparse.Namespace, name: str) -> Path:
    """--out if given, else a file named after the checkpoint next to it."""
    if getattr(args, "out", None):
        return args.out
    return args.checkpoint.parent / f"{args.checkpoint.stem}_{name}"
