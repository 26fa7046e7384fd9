"""`train`: one MAPPO run per configured seed."""
import argparse
import logging
from multiprocessing import Pool
from pathlib import Path

from app.commands.common import add_variation_flags, output_root, variations_from_args
from app.core.config import get_settings
from app.core.errors import EXIT_OK
from app.schemas.run import RunConfig
from app.schemas.train import BaselineVariant
from app.services.training import TrainResult, seed_dir, train
from app.services.variations import apply_variation
from app.storage.config_io import load_run_config

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("train", help="train one run per seed")
    p.add_argument("--config", type=Path, help="run configuration (TOML)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, action="append", help="train only these seeds (repeatable)")
    p.add_argument("--variant", choices=[v.value for v in BaselineVariant])
    p.add_argument("--out", type=Path, help="run directory")
    p.add_argument("--single-threaded", action="store_true", default=None, help="train seeds one after another")
    p.add_argument("--workers", type=int, help="worker processes for multi-seed training")
    add_variation_flags(p)
    p.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.set)
    if args.variant:
        overrides.append(f'variant="{args.variant}"')
    if args.seed:
        overrides.append(f"seeds={list(args.seed)}")
    if args.single_threaded:
        overrides.append("single_threaded=true")
    config = load_run_config(args.config, overrides)
    variations = variations_from_args(args)
    if variations:
        env = apply_variation(config.env_config(), variations)
        config = config.model_copy(update={"world": env.world, "sensor": env.sensor, "task": env.task})
    return config


def _train_job(job: tuple[RunConfig, int, Path]) -> TrainResult:
    config, seed, out = job
    return train(config, seed, out)


def run(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = args.out or config.output_dir or output_root() / config.label
    jobs = [(config, seed, seed_dir(out, seed)) for seed in config.seeds]
    workers = args.workers or get_settings().max_workers

    if config.single_threaded or len(jobs) == 1 or workers <= 1:
        results = [_train_job(job) for job in jobs]
    else:
        with Pool(min(workers, len(jobs))) as pool:
            results = pool.map(_train_job, jobs)

    for result in results:
        last = result.metrics[-1] if result.metrics else None
        success = f"{last.success_rate:.2f}" if last else "-"
        print(f"seed {result.seed}: {len(result.metrics)} iterations, final success {success} -> {result.final_checkpoint}")
    print(out)
    return EXIT_OK
