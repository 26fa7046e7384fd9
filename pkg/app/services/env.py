"""Two-agent grasp-lift-transport task on top of the planar world.

Each control step applies both agents' actions for `action_repeat` physics
steps, senses the finger forces after every physics step, and returns the
per-agent observations, the privileged critic observation and the rewards.
"""
import logging

import numpy as np

from app.core.errors import LifecycleError
from app.models.forces import DeltaForce, ForceFrame, TernaryFrame
from app.models.observation import (
    OBS_DIM,
    AgentAction,
    AgentObservation,
    Outcome,
    PrivilegedObservation,
    RewardBreakdown,
    StepResult,
)
from app.models.world import AgentControl, WorldState
from app.schemas.base import ensure_valid
from app.schemas.task import EnvConfig, ForceVariant
from app.services import physics
from app.services.scoring import EpisodeProgress, check_termination, compute_reward, rod_target_distance
from app.services.seeding import NOISE, TARGET, make_rng
from app.services.sensing import ForceHistory, sense

logger = logging.getLogger(__name__)


def sample_target(rng: np.random.Generator, config: EnvConfig, rod_start: np.ndarray) -> np.ndarray:
    task = config.task
    return np.array([
        rod_start[0] + rng.uniform(*task.target_x_range),
        rod_start[1] + rng.uniform(*task.target_lift_range),
    ])


def build_observation(
    world: WorldState,
    agent: int,
    target: np.ndarray,
    points: np.ndarray,
    force_channels: np.ndarray,
    variant: ForceVariant,
) -> AgentObservation:
    gripper = world.grippers[agent]
    rod = world.rod
    values = np.empty(OBS_DIM)
    values[0:2] = gripper.position
    values[2:4] = gripper.velocity
    values[4] = gripper.aperture
    values[5] = gripper.aperture_rate
    values[6] = 1.0 if gripper.grasp_flag else 0.0
    values[7:9] = points[agent]
    values[9:11] = rod.position
    values[11] = rod.tilt
    values[12:14] = target
    values[14:18] = 0.0 if variant is ForceVariant.NONE else force_channels
    return AgentObservation(values=values, force_variant=variant)


def _to_control(action) -> AgentControl:
    return AgentControl(velocity=np.asarray(action.velocity, dtype=float), pinch=float(action.pinch))


class CoopGraspEnv:
    """Reset/step lifecycle over one world, one target and one sensor stream."""

    def __init__(self, config: EnvConfig):
        self.config = ensure_valid(config, prefix="env")
        self.world: WorldState | None = None
        self.target = np.zeros(2)
        self.t = 0
        self.done = True
        self.outcome = Outcome.RUNNING
        self.sensed: ForceFrame | None = None
        self.delta: DeltaForce | None = None
        self.ternary: TernaryFrame | None = None
        self._progress = EpisodeProgress()
        self._history = ForceHistory(self.config.sensor.epsilon)
        self._noise_rng: np.random.Generator | None = None

    @property
    def force_variant(self) -> ForceVariant:
        return self.config.task.force_variant

    def reset(self, seed: int) -> tuple[tuple[AgentObservation, AgentObservation], PrivilegedObservation]:
        cfg = self.config
        self.world = physics.world_reset(cfg.world, seed)
        self.target = sample_target(make_rng(seed, TARGET), cfg, self.world.rod.position)
        self._noise_rng = make_rng(seed, NOISE)
        self.t = 0
        self.done = False
        self.outcome = Outcome.RUNNING
        self._progress = EpisodeProgress()
        self._sense(first=True)
        return self._observe()

    def step(self, actions) -> StepResult:
        if self.world is None:
            raise LifecycleError("step called before reset")
        if self.done:
            raise LifecycleError(f"step called after episode end ({self.outcome.value}); reset first")
        cfg = self.config
        controls = tuple(_to_control(self._clamp(a)) for a in actions)

        previous = self.world
        for _ in range(cfg.task.action_repeat):
            self.world = physics.world_step(self.world, controls, cfg.world)
            self.t += 1
            self._sense()
            self.outcome, self._progress = check_termination(self.world, self.t, cfg, self.target, self._progress)
            if self.outcome is not Outcome.RUNNING:
                self.done = True
                break

        rewards = compute_reward(previous, self.world, cfg, self.target)
        observations, privileged = self._observe()
        distance = rod_target_distance(self.world, self.target)
        if self.done:
            logger.debug("episode end at t=%d: %s (distance %.4f m)", self.t, self.outcome.value, distance)
        return StepResult(
            observations=observations,
            privileged=privileged,
            rewards=rewards,
            done=self.done,
            outcome=self.outcome,
            deltas=self.delta.values.copy(),
            truncated=self.outcome is Outcome.TIMEOUT,
            info={"t": self.t, "distance": distance},
        )

    def _clamp(self, action) -> AgentAction:
        if isinstance(action, AgentAction):
            return action.clamp(self.config.task)
        return AgentAction.from_policy(np.asarray(action, dtype=float), self.config.task)

    def _sense(self, first: bool = False) -> None:
        true = physics.finger_forces(self.world).reshape(physics.N_AGENTS, -1)
        self.sensed = sense(true, self.config.sensor, self._noise_rng, t=self.t)
        if first:
            self.delta, self.ternary = self._history.reset(self.sensed)
        else:
            self.delta, self.ternary = self._history.push(self.sensed)

    def force_channels(self, agent: int) -> np.ndarray:
        if self.force_variant is ForceVariant.RAW:
            return self.sensed.agent(agent)
        if self.force_variant is ForceVariant.TERNARY:
            return self.ternary.agent(agent).astype(float)
        return np.zeros(4)

    def _observe(self):
        points = physics.grasp_points(self.world, self.config.world)
        observations = tuple(
            build_observation(self.world, i, self.target, points, self.force_channels(i), self.force_variant)
            for i in range(physics.N_AGENTS)
        )
        privileged = PrivilegedObservation(
            values=np.concatenate([o.values for o in observations] + [self.delta.values.reshape(-1)])
        )
        return observations, privileged

    def global_state(self) -> np.ndarray:
        """Rod velocities and ground-truth finger forces, for critics that see the full state."""
        rod = self.world.rod
        return np.concatenate([
            rod.linear_velocity,
            [rod.angular_velocity],
            physics.finger_forces(self.world).reshape(-1),
        ])

    def trace_record(self, rewards: tuple[RewardBreakdown, RewardBreakdown] | None = None) -> dict:
        """JSON-serializable snapshot of the current step for replay traces."""
        w = self.world
        rod = w.rod
        return {
            "t": self.t,
            "rod": {
                "x": float(rod.position[0]),
                "z": float(rod.position[1]),
                "tilt": rod.tilt,
                "vx": float(rod.linear_velocity[0]),
                "vz": float(rod.linear_velocity[1]),
                "omega": rod.angular_velocity,
            },
            "grippers": [
                {
                    "x": float(g.position[0]),
                    "z": float(g.position[1]),
                    "vx": float(g.velocity[0]),
                    "vz": float(g.velocity[1]),
                    "aperture": g.aperture,
                    "grasp": g.grasp_flag,
                }
                for g in w.grippers
            ],
            "sensed": self.sensed.values.tolist(),
            "delta": self.delta.values.tolist(),
            "ternary": self.ternary.values.astype(int).tolist(),
            "rewards": [r.as_dict() for r in rewards] if rewards is not None else [],
            "distance": rod_target_distance(w, self.target),
            "outcome": self.outcome.value,
        }
