"""`defaults`: print (or write) the fully populated default run configuration."""
import argparse
from pathlib import Path

from app.core.errors import EXIT_OK
from app.schemas.run import RunConfig
from app.storage.config_io import dump_run_config, dumps_run_config


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("defaults", help="dump the default configuration as TOML")
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.out:
        dump_run_config(RunConfig(), args.out)
        print(args.out)
    else:
        print(dumps_run_config(RunConfig()), end="")
    return EXIT_OK
