"""Task (Dec-POMDP wrapper) configuration, variation descriptors and the env bundle."""
from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import Field, model_validator

from app.schemas.base import ConfigModel
from app.schemas.sensor import SensorConfig
from app.schemas.world import GeometryProfile, WorldConfig


class ForceVariant(str, Enum):
    RAW = "raw"
    TERNARY = "ternary"
    NONE = "none"


class RewardWeights(ConfigModel):
    reach: float = Field(3.0, ge=0)
    grasp: float = Field(4.0, ge=0)
    grasp_team: float = Field(7.5, ge=0)
    lift: float = Field(9.5, ge=0)
    pos: float = Field(20.0, ge=0)
    ori: float = Field(3.0, ge=0)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.reach, self.grasp, self.grasp_team, self.lift, self.pos, self.ori)


class TaskConfig(ConfigModel):
    weights: RewardWeights = RewardWeights()

    # Target offsets relative to the rod's initial centroid (metres)
    target_x_range: tuple[float, float] = (-0.20, 0.20)
    target_lift_range: tuple[float, float] = (0.45, 0.80)

    success_threshold: float = Field(0.06, gt=0)
    success_hold_steps: int = Field(50, ge=1)  # physics steps
    horizon: int = Field(1000, gt=0)  # physics steps
    lift_height: float = Field(0.05, gt=0)
    reward_length_scale: float = Field(0.2, gt=0)
    action_repeat: int = Field(1, ge=1)

    v_max: float = Field(0.5, gt=0)
    f_max: float = Field(20.0, gt=0)

    force_variant: ForceVariant = ForceVariant.TERNARY

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "TaskConfig":
        for name in ("target_x_range", "target_lift_range"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} lower bound exceeds upper bound")
        return self


# ---------- variations ----------

class ForceScale(ConfigModel):
    kind: Literal["force_scale"] = "force_scale"
    scale: float = Field(gt=0)

    def label(self) -> str:
        return f"force_scale={self.scale:g}"


class Geometry(ConfigModel):
    kind: Literal["geometry"] = "geometry"
    profile: GeometryProfile

    def label(self) -> str:
        return f"geometry={self.profile.value}"


class ObjectSize(ConfigModel):
    kind: Literal["object_size"] = "object_size"
    length: float = Field(gt=0)
    thickness: float = Field(gt=0)

    def label(self) -> str:
        return f"object_size={self.length:g}x{self.thickness:g}"


class SensorGap(ConfigModel):
    kind: Literal["sensor_gap"] = "sensor_gap"
    gain: float = Field(1.0, gt=0)
    bias: float = 0.0
    noise_std: float = Field(0.0, ge=0)

    def label(self) -> str:
        return f"sensor_gap=gain:{self.gain:g},bias:{self.bias:g},noise:{self.noise_std:g}"


class ControlRate(ConfigModel):
    kind: Literal["control_rate"] = "control_rate"
    hz: float = Field(gt=0)

    def label(self) -> str:
        return f"control_hz={self.hz:g}"


Variation = Annotated[
    Union[ForceScale, Geometry, ObjectSize, SensorGap, ControlRate],
    Field(discriminator="kind"),
]


def variation_label(variations: list | tuple) -> str:
    if not variations:
        return "nominal"
    return ";".join(v.label() for v in variations)


class EnvConfig(ConfigModel):
    """Everything one environment instance needs."""

    world: WorldConfig = WorldConfig()
    sensor: SensorConfig = SensorConfig()
    task: TaskConfig = TaskConfig()
