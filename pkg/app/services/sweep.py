"""Robustness sweeps: every checkpoint under every variation and evaluation seed."""
import logging
from multiprocessing import Pool

from app.core.errors import UsageError
from app.schemas.results import ResultsRow
from app.schemas.sweep import SweepSpec
from app.services.training import describe_variations, evaluate
from app.storage.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


def sweep_cells(spec: SweepSpec) -> list[tuple[str, list, int, int]]:
    """(checkpoint, variations, seed, episodes) in deterministic (checkpoint, variation, seed) order."""
    if not spec.checkpoints or not spec.variations or not spec.seeds:
        raise UsageError("sweep needs at least one checkpoint, one variation and one seed")
    return [
        (str(ckpt), [v.model_dump() for v in variations], seed, spec.episodes)
        for ckpt in spec.checkpoints
        for variations in spec.variations
        for seed in spec.seeds
    ]


def run_cell(cell: tuple[str, list, int, int]) -> ResultsRow:
    path, variations, seed, episodes = cell
    checkpoint = load_checkpoint(path)
    report = evaluate(checkpoint, variations, episodes, seed)
    return ResultsRow(
        variant=checkpoint.variant.value,
        variation=describe_variations(variations),
        success_rate=report.success_rate,
        position_error_mean_m=report.position_error_mean,
        position_error_sample_variance_m2=report.position_error_variance,
        n_episodes=report.n_episodes,
        seed=seed,
        checkpoint=path,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultsRow]:
    cells = sweep_cells(spec)
    logger.info("sweep: %d cells on %d worker(s)", len(cells), workers)
    if workers <= 1 or len(cells) == 1:
        return [run_cell(c) for c in cells]
    with Pool(min(workers, len(cells))) as pool:
        return pool.map(run_cell, cells)
