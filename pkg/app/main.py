"""Cooperative grasp simulator - command-line entry point."""
import argparse
import logging
import sys

from app.commands import aggregate, defaults, evaluate, force_stats, replay, sweep, train
from app.core.config import get_settings
from app.core.errors import EXIT_RUNTIME, EXIT_USAGE, CoopGraspError, TrainingAbortedError
from app.core.logsetup import configure_logging

logger = logging.getLogger(__name__)

COMMANDS = (train, evaluate, sweep, force_stats, replay, aggregate, defaults)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="coopgrasp", description=settings.app_name)
    parser.add_argument("--log-level", default=settings.log_level, help="logging level (default %(default)s)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        configure_logging(args.log_level)
    except ValueError:
        print(f"error: unknown log level {args.log_level!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except TrainingAbortedError as exc:
        print(f"error: training aborted: {exc} (last checkpoint: {exc.last_checkpoint})", file=sys.stderr)
        return exc.exit_code
    except CoopGraspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("unexpected failure in %s", args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
