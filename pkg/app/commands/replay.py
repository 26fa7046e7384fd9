"""`replay`: one deterministic episode exported as a JSON-lines trace."""
import argparse
from pathlib import Path

from app.commands.common import add_variation_flags, variations_from_args
from app.core.errors import EXIT_OK
from app.services.training import replay
from app.storage.checkpoint import load_checkpoint


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("replay", help="write an episode trace")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="trace file (default: <checkpoint>_seed<N>.jsonl)")
    add_variation_flags(p)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    out = args.out or args.checkpoint.parent / f"{args.checkpoint.stem}_seed{args.seed}.jsonl"
    outcome = replay(checkpoint, args.seed, out, variations_from_args(args))
    print(
        f"{outcome.outcome} after {outcome.control_steps} control steps ({outcome.length} physics steps), "
        f"final distance {outcome.final_distance:.4f} m"
    )
    print(out)
    return EXIT_OK
