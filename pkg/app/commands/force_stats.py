"""`force-stats`: mean and variance of the force channels the actor observes."""
import argparse

from app.commands.common import add_checkpoint_args, add_variation_flags, check_episodes, default_output, variations_from_args
from app.core.errors import EXIT_OK
from app.schemas.results import ForceStatsRow
from app.services.training import force_stats
from app.storage.checkpoint import load_checkpoint
from app.storage.tables import FORCE_STATS_SCHEMA, write_table


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("force-stats", help="statistics of the actor's force observations")
    add_checkpoint_args(p, episodes=10)
    add_variation_flags(p)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    episodes = check_episodes(args.episodes)
    checkpoint = load_checkpoint(args.checkpoint)
    rows = force_stats(checkpoint, variations_from_args(args), episodes, args.seed)
    out = write_table(default_output(args, "force_stats.csv"), FORCE_STATS_SCHEMA, ForceStatsRow, rows)
    for row in rows:
        print(f"{row.variant:<8} {row.variation:<24} ch {row.channel:<3} mean {row.mean:+.4f} var {row.variance:.4f} (n={row.samples})")
    print(out)
    return EXIT_OK
