"""Cross-seed learning curves and the console pivot tables of sweep results."""
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from app.schemas.results import CurveRow, MetricsRow, ResultsRow
from app.schemas.train import VARIANT_DISPLAY, BaselineVariant
from app.storage.tables import METRICS_SCHEMA, read_table


def _var(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.var(ddof=1)) if finite.size > 1 else 0.0


def _mean(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.mean()) if finite.size else math.nan


def aggregate_curves(metrics_files: list[Path]) -> list[CurveRow]:
    """Mean and sample variance per iteration over the seeds that reached it."""
    by_iteration: dict[int, list[MetricsRow]] = defaultdict(list)
    for path in metrics_files:
        for row in read_table(path, METRICS_SCHEMA, MetricsRow):
            by_iteration[row.iteration].append(row)
    curves = []
    for iteration in sorted(by_iteration):
        rows = by_iteration[iteration]
        rewards = np.array([r.mean_episode_reward for r in rows])
        success = np.array([r.success_rate for r in rows])
        curves.append(
            CurveRow(
                iteration=iteration,
                env_steps=rows[0].env_steps,
                seeds=len(rows),
                reward_mean=_mean(rewards),
                reward_variance=_var(rewards),
                success_mean=_mean(success),
                success_variance=_var(success),
            )
        )
    return curves


def _display(variant: str) -> str:
    try:
        return VARIANT_DISPLAY[BaselineVariant(variant)]
    except ValueError:
        return variant


def pivot(rows: list[ResultsRow], field: str, scale: float = 1.0) -> tuple[list[str], list[str], np.ndarray]:
    """Rows = variation, columns = variant, cells = mean of `field` over seeds and checkpoints."""
    variations = list(dict.fromkeys(r.variation for r in rows))
    variants = list(dict.fromkeys(r.variant for r in rows))
    cells: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in rows:
        cells[(r.variation, r.variant)].append(getattr(r, field) * scale)
    table = np.full((len(variations), len(variants)), np.nan)
    for i, variation in enumerate(variations):
        for j, variant in enumerate(variants):
            values = cells.get((variation, variant))
            if values:
                table[i, j] = float(np.mean(values))
    return variations, variants, table


def format_pivot(rows: list[ResultsRow], field: str, title: str, scale: float = 1.0, fmt: str = "{:.1f}") -> str:
    variations, variants, table = pivot(rows, field, scale)
    headers = ["variation"] + [_display(v) for v in variants]
    body = [
        [variation] + ["-" if np.isnan(x) else fmt.format(x) for x in table[i]]
        for i, variation in enumerate(variations)
    ]
    widths = [max(len(line[k]) for line in [headers] + body) for k in range(len(headers))]
    lines = [title, "  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(line, widths)) for line in body)
    return "\n".join(lines)
