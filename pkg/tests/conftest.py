from pathlib import Path

import numpy as np
import pytest

from app.core.config import get_settings
from app.models.world import GripperState, RodState, WorldState
from app.schemas.task import EnvConfig, TaskConfig
from app.schemas.world import WorldConfig
from app.services.physics import refresh_contacts

TINY_CONFIG = """\
label = "tiny"
variant = "{variant}"
seeds = [0]

[task]
horizon = 5

[train]
num_envs = 1
rollout_length = 8
total_env_steps = 8
epochs = 1
minibatches = 2
checkpoint_interval = 1

[train.network]
actor_hidden = [8]
critic_hidden = [8]
"""


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.setenv("COOPGRASP_OUTPUT_ROOT", str(tmp_path / "runs"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def world_config() -> WorldConfig:
    return WorldConfig()


@pytest.fixture
def env_config() -> EnvConfig:
    return EnvConfig()


@pytest.fixture
def short_env_config() -> EnvConfig:
    return EnvConfig(task=TaskConfig(horizon=3))


def _gripper(x: float, z: float, aperture: float, grasp: bool = False) -> GripperState:
    return GripperState(
        position=np.array([x, z]),
        velocity=np.zeros(2),
        aperture=aperture,
        aperture_rate=0.0,
        grasp_flag=grasp,
    )


@pytest.fixture
def make_state():
    """Build a WorldState from plain numbers; contacts are recomputed unless `config` is None."""

    def build(
        rod_xz=(0.0, 0.418),
        tilt=0.0,
        grippers=((-0.6, 0.6), (0.6, 0.6)),
        apertures=(0.08, 0.08),
        grasp=(False, False),
        rod_velocity=(0.0, 0.0),
        config: WorldConfig | None = None,
        contacts=(),
        sim_time=0.0,
    ) -> WorldState:
        rod = RodState(
            position=np.array(rod_xz, dtype=float),
            tilt=tilt,
            linear_velocity=np.array(rod_velocity, dtype=float),
            angular_velocity=0.0,
        )
        state = WorldState(
            rod=rod,
            grippers=tuple(_gripper(x, z, a, g) for (x, z), a, g in zip(grippers, apertures, grasp)),
            contacts=tuple(contacts),
            sim_time=sim_time,
        )
        return refresh_contacts(state, config) if config is not None else state

    return build


@pytest.fixture
def pinched_state(make_state):
    """Both grippers centred on their grasp points with the fingers just touching the rod."""

    def build(config: WorldConfig) -> WorldState:
        z = config.rest_height
        return make_state(
            rod_xz=(0.0, z),
            grippers=((-config.grasp_offset, z), (config.grasp_offset, z)),
            apertures=(config.rod_thickness, config.rod_thickness),
            config=config,
        )

    return build


@pytest.fixture
def tiny_config_file(tmp_path):
    def write(variant: str = "ours", name: str = "tiny.toml") -> Path:
        path = tmp_path / name
        path.write_text(TINY_CONFIG.format(variant=variant))
        return path

    return write
