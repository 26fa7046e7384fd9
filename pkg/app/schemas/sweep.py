"""Robustness sweep description: checkpoints x variations x evaluation seeds."""
from pathlib import Path

from pydantic import Field

from app.schemas.base import ConfigModel
from app.schemas.task import Variation


class SweepSpec(ConfigModel):
    checkpoints: list[Path] = Field(default_factory=list)
    # Each entry is one cell's variation list; [] is the nominal condition
    variations: list[list[Variation]] = Field(default_factory=lambda: [[]])
    seeds: list[int] = Field(default_factory=lambda: [0])
    episodes: int = Field(100, ge=0)

    @property
    def n_cells(self) -> int:
        return len(self.checkpoints) * len(self.variations) * len(self.seeds)
