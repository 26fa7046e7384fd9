"""Rigid-body state of the planar world: rod, two grippers and their contacts."""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AgentControl:
    """Per-step command for one gripper: frame velocity (m/s) and pinch force (N)."""

    velocity: np.ndarray
    pinch: float

    @classmethod
    def zero(cls) -> "AgentControl":
        return cls(velocity=np.zeros(2), pinch=0.0)


@dataclass(frozen=True)
class RodState:
    position: np.ndarray  # (x, z)
    tilt: float
    linear_velocity: np.ndarray
    angular_velocity: float


@dataclass(frozen=True)
class GripperState:
    position: np.ndarray
    velocity: np.ndarray
    aperture: float
    aperture_rate: float
    grasp_flag: bool


@dataclass(frozen=True)
class ContactPoint:
    # (agent, finger) for finger contacts; None for rod-table contacts
    finger_id: tuple[int, int] | None
    penetration: float
    contact_normal: np.ndarray  # direction the contact pushes the rod
    relative_velocity: np.ndarray  # rod point velocity minus the other body's
    force: np.ndarray  # force applied to the rod
    point: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def normal_force(self) -> float:
        return float(self.force @ self.contact_normal)

    @property
    def tangential_force(self) -> float:
        tangential = self.force - self.normal_force * self.contact_normal
        return float(np.hypot(tangential[0], tangential[1]))

    @property
    def is_table(self) -> bool:
        return self.finger_id is None


@dataclass(frozen=True)
class WorldState:
    rod: RodState
    grippers: tuple[GripperState, GripperState]
    contacts: tuple[ContactPoint, ...]
    sim_time: float
    step_count: int = 0

    @property
    def table_contacts(self) -> tuple[ContactPoint, ...]:
        return tuple(c for c in self.contacts if c.is_table)

    @property
    def finger_contacts(self) -> tuple[ContactPoint, ...]:
        return tuple(c for c in self.contacts if not c.is_table)
