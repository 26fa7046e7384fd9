"""Reward terms of the grasp-lift-transport task and termination bookkeeping."""
import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import SequencingError
from app.models.observation import Outcome, RewardBreakdown
from app.models.world import WorldState
from app.schemas.task import EnvConfig, TaskConfig
from app.services.physics import grasp_points, rod_touches_table

# Centroid rise above the rest height that counts as "lifted" for drop detection
LIFT_DETECT_HEIGHT = 0.02


def _shaped(distance: float, length_scale: float) -> float:
    return math.exp(-distance / length_scale)


def weighted_total(terms: tuple[float, ...], task: TaskConfig) -> float:
    return float(sum(w * t for w, t in zip(task.weights.as_tuple(), terms)))


def compute_reward(
    previous: WorldState,
    current: WorldState,
    config: EnvConfig,
    target: np.ndarray,
) -> tuple[RewardBreakdown, RewardBreakdown]:
    """Individual reach/grasp terms plus team terms gated on both agents grasping."""
    if current.sim_time < previous.sim_time:
        raise SequencingError(f"reward states out of order: t={previous.sim_time} then t={current.sim_time}")

    task, world = config.task, config.world
    scale = task.reward_length_scale
    points = grasp_points(current, world)
    both = all(g.grasp_flag for g in current.grippers)

    rod = current.rod
    grasp_team = 1.0 if both else 0.0
    lift = 1.0 if both and rod.position[1] > world.table_height + task.lift_height else 0.0
    pos = _shaped(float(np.linalg.norm(rod.position - target)), scale) if both else 0.0
    ori = -abs(rod.tilt) if both else 0.0

    rewards = []
    for gripper, point in zip(current.grippers, points):
        reach = _shaped(float(np.linalg.norm(gripper.position - point)), scale)
        grasp = 1.0 if gripper.grasp_flag else 0.0
        terms = (reach, grasp, grasp_team, lift, pos, ori)
        rewards.append(RewardBreakdown(*terms, total=weighted_total(terms, task)))
    return rewards[0], rewards[1]


@dataclass(frozen=True)
class EpisodeProgress:
    hold_steps: int = 0
    lifted: bool = False


def rod_target_distance(world: WorldState, target: np.ndarray) -> float:
    return float(np.linalg.norm(world.rod.position - target))


def check_termination(
    world: WorldState,
    t: int,
    config: EnvConfig,
    target: np.ndarray,
    progress: EpisodeProgress,
) -> tuple[Outcome, EpisodeProgress]:
    """Outcome after physics step t, with the hold counter and lifted flag carried forward."""
    task, cfg = config.task, config.world
    touching = rod_touches_table(world)
    rod_z = float(world.rod.position[1])

    lifted = progress.lifted or (not touching and rod_z > cfg.rest_height + LIFT_DETECT_HEIGHT)
    if progress.lifted and (touching or rod_z < cfg.table_height):
        return Outcome.DROPPED, EpisodeProgress(hold_steps=0, lifted=lifted)

    hold = progress.hold_steps + 1 if rod_target_distance(world, target) < task.success_threshold else 0
    progress = EpisodeProgress(hold_steps=hold, lifted=lifted)
    if hold >= task.success_hold_steps:
        return Outcome.SUCCESS, progress
    if t >= task.horizon:
        return Outcome.TIMEOUT, progress
    return Outcome.RUNNING, progress
