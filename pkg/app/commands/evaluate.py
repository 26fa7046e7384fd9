"""`eval`: deterministic evaluation of one checkpoint under one variation."""
import argparse

from app.commands.common import (
    add_checkpoint_args,
    add_variation_flags,
    check_episodes,
    default_output,
    expected_variant,
    variations_from_args,
)
from app.core.errors import EXIT_OK
from app.schemas.results import ResultsRow
from app.services.training import describe_variations, evaluate
from app.storage.checkpoint import load_checkpoint
from app.storage.tables import RESULTS_SCHEMA, write_table


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("eval", help="evaluate a checkpoint")
    add_checkpoint_args(p, episodes=100)
    add_variation_flags(p)
    p.set_defaults(handler=run)


def format_row(row: ResultsRow) -> str:
    return (
        f"{row.variant:<8} {row.variation:<24} success {100 * row.success_rate:5.1f}%  "
        f"position error {100 * row.position_error_mean_m:.2f} cm "
        f"(var {1e4 * row.position_error_sample_variance_m2:.3f} cm^2, n={row.n_episodes}, seed={row.seed})"
    )


def run(args: argparse.Namespace) -> int:
    episodes = check_episodes(args.episodes)
    variations = variations_from_args(args)
    checkpoint = load_checkpoint(args.checkpoint)
    report = evaluate(checkpoint, variations, episodes, args.seed, variant=expected_variant(args))
    row = ResultsRow(
        variant=checkpoint.variant.value,
        variation=describe_variations(variations),
        success_rate=report.success_rate,
        position_error_mean_m=report.position_error_mean,
        position_error_sample_variance_m2=report.position_error_variance,
        n_episodes=report.n_episodes,
        seed=args.seed,
        checkpoint=str(args.checkpoint),
    )
    out = write_table(default_output(args, "results.csv"), RESULTS_SCHEMA, ResultsRow, [row])
    print(format_row(row))
    print(out)
    return EXIT_OK
