"""Training configuration and baseline variants."""
from enum import Enum

from pydantic import Field

from app.schemas.base import ConfigModel
from app.schemas.task import ForceVariant


class BaselineVariant(str, Enum):
    OURS = "ours"
    RAW_FORCE = "raw"
    TERNARY_FORCE = "ternary"
    NO_FORCE = "noforce"

    @property
    def actor_force_variant(self) -> ForceVariant:
        if self is BaselineVariant.RAW_FORCE:
            return ForceVariant.RAW
        if self is BaselineVariant.NO_FORCE:
            return ForceVariant.NONE
        return ForceVariant.TERNARY

    @property
    def critic_uses_delta(self) -> bool:
        return self is BaselineVariant.OURS


VARIANT_DISPLAY = {
    BaselineVariant.OURS: "Ours",
    BaselineVariant.RAW_FORCE: "Raw Force",
    BaselineVariant.TERNARY_FORCE: "Ternary Force",
    BaselineVariant.NO_FORCE: "No Force",
}


class NetworkConfig(ConfigModel):
    actor_hidden: tuple[int, ...] = (64, 64)
    critic_hidden: tuple[int, ...] = (128, 128)
    init_log_std: float = Field(-0.5, ge=-5.0, le=1.0)
    actor_output_gain: float = Field(0.01, gt=0)
    share_weights: bool = False
    # Append rod velocity and ground-truth finger forces to the critic input
    critic_global_state: bool = False


class TrainConfig(ConfigModel):
    gamma: float = Field(0.99, gt=0, le=1)
    gae_lambda: float = Field(0.95, gt=0, le=1)
    clip_eps: float = Field(0.2, gt=0)
    epochs: int = Field(4, ge=1)
    minibatches: int = Field(8, ge=1)
    actor_lr: float = Field(3e-4, gt=0)
    critic_lr: float = Field(3e-4, gt=0)
    entropy_coef: float = Field(0.01, ge=0)
    value_coef: float = Field(0.5, ge=0)
    rollout_length: int = Field(256, ge=1)
    num_envs: int = Field(16, ge=1)
    total_env_steps: int = Field(1_048_576, ge=1)
    max_grad_norm: float = Field(0.5, gt=0)
    checkpoint_interval: int = Field(10, ge=1)

    normalize_observations: bool = True
    force_scale_constant: float = Field(10.0, gt=0)  # N

    network: NetworkConfig = NetworkConfig()

    @property
    def batch_size(self) -> int:
        return self.rollout_length * self.num_envs

    @property
    def iterations(self) -> int:
        return max(1, self.total_env_steps // self.batch_size)
