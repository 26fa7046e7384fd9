"""Complete experiment description (the TOML run file)."""
from pathlib import Path

from pydantic import Field, field_validator

from app.schemas.base import ConfigModel
from app.schemas.sensor import SensorConfig
from app.schemas.task import EnvConfig, TaskConfig
from app.schemas.train import BaselineVariant, TrainConfig
from app.schemas.world import WorldConfig


class RunConfig(ConfigModel):
    label: str = "run"
    variant: BaselineVariant = BaselineVariant.OURS
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: Path | None = None
    single_threaded: bool = True

    world: WorldConfig = WorldConfig()
    sensor: SensorConfig = SensorConfig()
    task: TaskConfig = TaskConfig()
    train: TrainConfig = TrainConfig()

    @field_validator("seeds")
    @classmethod
    def _seeds_distinct(cls, seeds: list[int]) -> list[int]:
        if not seeds:
            raise ValueError("at least one seed is required")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        return seeds

    def env_config(self) -> EnvConfig:
        """Env bundle with the task's force channels matching the variant's actor."""
        task = self.task.model_copy(update={"force_variant": self.variant.actor_force_variant})
        return EnvConfig(world=self.world, sensor=self.sensor, task=task)
