"""Per-agent observations, actions, rewards and step results of the grasp task."""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.schemas.task import ForceVariant, TaskConfig

OBS_DIM = 18
FORCE_SLICE = slice(14, 18)
NON_FORCE_DIM = 14
DELTA_DIM = 4
PRIVILEGED_DIM = 2 * OBS_DIM + 2 * DELTA_DIM
ACTION_DIM = 3

# Channel layout of an AgentObservation
OBS_LAYOUT = {
    "gripper_position": slice(0, 2),
    "gripper_velocity": slice(2, 4),
    "aperture": slice(4, 5),
    "aperture_rate": slice(5, 6),
    "grasp_flag": slice(6, 7),
    "grasp_point": slice(7, 9),
    "rod_position": slice(9, 11),
    "rod_tilt": slice(11, 12),
    "target": slice(12, 14),
    "force": FORCE_SLICE,
}


class Outcome(str, Enum):
    RUNNING = "running"
    SUCCESS = "success"
    DROPPED = "dropped"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class AgentObservation:
    values: np.ndarray  # (OBS_DIM,)
    force_variant: ForceVariant

    @property
    def force(self) -> np.ndarray:
        return self.values[FORCE_SLICE]

    @property
    def non_force(self) -> np.ndarray:
        return self.values[:NON_FORCE_DIM]


@dataclass(frozen=True)
class PrivilegedObservation:
    values: np.ndarray  # (PRIVILEGED_DIM,)


@dataclass(frozen=True)
class AgentAction:
    velocity: np.ndarray
    pinch: float

    @classmethod
    def from_policy(cls, raw: np.ndarray, task: TaskConfig) -> "AgentAction":
        """Map a normalized 3-vector (vx, vz, pinch) to physical units.

        A pinch component <= 0 commands zero force, which opens the fingers.
        """
        raw = np.asarray(raw, dtype=float)
        return cls(velocity=task.v_max * raw[:2], pinch=task.f_max * max(0.0, float(raw[2]))).clamp(task)

    def clamp(self, task: TaskConfig) -> "AgentAction":
        return AgentAction(
            velocity=np.clip(np.asarray(self.velocity, dtype=float), -task.v_max, task.v_max),
            pinch=float(np.clip(self.pinch, 0.0, task.f_max)),
        )


@dataclass(frozen=True)
class RewardBreakdown:
    r_reach: float
    r_grasp: float
    r_grasp_team: float
    r_lift: float
    r_pos: float
    r_ori: float
    total: float

    TERMS = ("r_reach", "r_grasp", "r_grasp_team", "r_lift", "r_pos", "r_ori")

    def terms(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.TERMS)

    def as_dict(self) -> dict[str, float]:
        out = {name: getattr(self, name) for name in self.TERMS}
        out["total"] = self.total
        return out


@dataclass(frozen=True)
class StepResult:
    observations: tuple[AgentObservation, AgentObservation]
    privileged: PrivilegedObservation
    rewards: tuple[RewardBreakdown, RewardBreakdown]
    done: bool
    outcome: Outcome
    deltas: np.ndarray  # (2, 4) delta force per agent
    truncated: bool = False
    info: dict = field(default_factory=dict)
