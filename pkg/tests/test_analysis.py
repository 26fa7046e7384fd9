import math

import numpy as np
import pytest

from app.schemas.results import MetricsRow, ResultsRow
from app.services.analysis import aggregate_curves, format_pivot, pivot
from app.storage.tables import METRICS_SCHEMA, write_table


def _metrics(iteration: int, reward: float, success: float) -> MetricsRow:
    zeros = dict.fromkeys(
        ("r_reach", "r_grasp", "r_grasp_team", "r_lift", "r_pos", "r_ori",
         "actor_loss", "critic_loss", "entropy", "approx_kl", "clip_fraction"),
        0.0,
    )
    return MetricsRow(
        iteration=iteration,
        env_steps=100 * iteration,
        mean_episode_reward=reward,
        success_rate=success,
        episodes=4,
        **zeros,
    )


def _result(variant: str, variation: str, success: float, seed: int = 0) -> ResultsRow:
    return ResultsRow(
        variant=variant,
        variation=variation,
        success_rate=success,
        position_error_mean_m=0.05,
        position_error_sample_variance_m2=0.0,
        n_episodes=10,
        seed=seed,
    )


def test_curves_use_sample_variance_across_seeds(tmp_path):
    a = write_table(tmp_path / "s0.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, 1.0, 0.0), _metrics(2, 3.0, 0.5)])
    b = write_table(tmp_path / "s1.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, 2.0, 0.0), _metrics(2, 5.0, 1.0)])
    curves = aggregate_curves([a, b])
    assert [c.iteration for c in curves] == [1, 2]
    assert curves[1].reward_mean == pytest.approx(4.0)
    assert curves[1].reward_variance == pytest.approx(2.0)
    assert curves[1].success_mean == pytest.approx(0.75)
    assert curves[0].env_steps == 100 and curves[0].seeds == 2


def test_curves_skip_iterations_without_finished_episodes(tmp_path):
    a = write_table(tmp_path / "s0.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, math.nan, 0.0)])
    b = write_table(tmp_path / "s1.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, 2.0, 0.0)])
    (curve,) = aggregate_curves([a, b])
    assert curve.reward_mean == pytest.approx(2.0) and curve.reward_variance == 0.0


def test_shorter_seed_only_counts_where_present(tmp_path):
    a = write_table(tmp_path / "s0.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, 1.0, 0.0)])
    b = write_table(tmp_path / "s1.csv", METRICS_SCHEMA, MetricsRow, [_metrics(1, 1.0, 0.0), _metrics(2, 1.0, 0.0)])
    assert [c.seeds for c in aggregate_curves([a, b])] == [2, 1]


def test_pivot_averages_seeds_per_cell():
    rows = [
        _result("ours", "nominal", 0.8, seed=0),
        _result("ours", "nominal", 0.6, seed=1),
        _result("noforce", "nominal", 0.2),
        _result("ours", "force_scale=2", 0.5),
    ]
    variations, variants, table = pivot(rows, "success_rate", scale=100.0)
    assert variations == ["nominal", "force_scale=2"] and variants == ["ours", "noforce"]
    assert table[0].tolist() == pytest.approx([70.0, 20.0])
    assert table[1, 0] == pytest.approx(50.0) and np.isnan(table[1, 1])


def test_pivot_text_marks_missing_cells():
    rows = [_result("ours", "nominal", 1.0), _result("raw", "geometry=cylinder", 0.25)]
    text = format_pivot(rows, "success_rate", "Success rate (%)", scale=100.0)
    lines = text.splitlines()
    assert lines[0] == "Success rate (%)"
    assert "100.0" in text and "25.0" in text
    assert lines[-1].split()[1] == "-"
