"""Execution-time changes to the grasping environment (force scale, geometry, size, sensor, rate)."""
from collections.abc import Iterable

from pydantic import BaseModel, TypeAdapter, ValidationError

from app.core.errors import ConfigurationError
from app.schemas.base import describe_validation_error
from app.schemas.task import (
    ControlRate,
    EnvConfig,
    ForceScale,
    Geometry,
    ObjectSize,
    SensorGap,
    Variation,
)
from app.schemas.world import CYLINDER_DIAMETER, SLAB_THICKNESS, GeometryProfile

_variation_adapter = TypeAdapter(Variation)

PROFILE_THICKNESS = {
    GeometryProfile.RECTANGULAR_SLAB: SLAB_THICKNESS,
    GeometryProfile.THIN_CYLINDER: CYLINDER_DIAMETER,
}


def parse_variation(raw) -> BaseModel:
    if isinstance(raw, (ForceScale, Geometry, ObjectSize, SensorGap, ControlRate)):
        return raw
    try:
        return _variation_adapter.validate_python(raw)
    except ValidationError as exc:
        raise ConfigurationError(f"unknown variation {raw!r}: {describe_validation_error(exc)}") from exc


def _apply_one(config: EnvConfig, v) -> EnvConfig:
    world, sensor, task = config.world, config.sensor, config.task
    if isinstance(v, ForceScale):
        world = world.model_copy(update={"gripper_force_scale": v.scale})
    elif isinstance(v, Geometry):
        world = world.model_copy(update={"geometry_profile": v.profile, "rod_thickness": PROFILE_THICKNESS[v.profile]})
    elif isinstance(v, ObjectSize):
        world = world.model_copy(update={"rod_length": v.length, "rod_thickness": v.thickness})
    elif isinstance(v, SensorGap):
        sensor = sensor.model_copy(update={"gain": v.gain, "bias": v.bias, "noise_std": v.noise_std})
    elif isinstance(v, ControlRate):
        repeat = max(1, round(1.0 / (v.hz * world.dt)))
        task = task.model_copy(update={"action_repeat": repeat})
    else:
        raise ConfigurationError(f"unknown variation {v!r}")
    return EnvConfig(world=world, sensor=sensor, task=task)


def apply_variation(config: EnvConfig, variations) -> EnvConfig:
    """Return a copy of `config` with each variation applied in order; the input is untouched."""
    if variations is None:
        return config
    if not isinstance(variations, Iterable) or isinstance(variations, (BaseModel, dict, str)):
        variations = [variations]
    for raw in variations:
        config = _apply_one(config, parse_variation(raw))
    return config
