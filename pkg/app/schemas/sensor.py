"""Force sensor model configuration."""
from pydantic import Field

from app.schemas.base import ConfigModel


class SensorConfig(ConfigModel):
    noise_std: float = Field(0.0, ge=0)
    gain: float = Field(1.0, gt=0)
    bias: float = 0.0
    # None -> 2 x noise_std
    deadband_epsilon: float | None = Field(None, ge=0)

    @property
    def epsilon(self) -> float:
        if self.deadband_epsilon is None:
            return 2.0 * self.noise_std
        return self.deadband_epsilon
