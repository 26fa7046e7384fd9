"""Pydantic schemas for metrics, evaluation reports and results tables."""
from pydantic import BaseModel, Field


class MetricsRow(BaseModel):
    iteration: int
    env_steps: int
    mean_episode_reward: float
    success_rate: float
    episodes: int
    r_reach: float
    r_grasp: float
    r_grasp_team: float
    r_lift: float
    r_pos: float
    r_ori: float
    actor_loss: float
    critic_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float


class EpisodeOutcome(BaseModel):
    outcome: str
    final_distance: float
    length: int  # physics steps
    control_steps: int  # env.step calls, one trace record each
    total_reward: float


class EvalReport(BaseModel):
    success_rate: float = Field(ge=0, le=1)
    position_error_mean: float
    position_error_variance: float  # sample variance (ddof = 1)
    episodes: list[EpisodeOutcome]

    @property
    def n_episodes(self) -> int:
        return len(self.episodes)


class ResultsRow(BaseModel):
    variant: str
    variation: str
    success_rate: float = Field(ge=0, le=1)
    position_error_mean_m: float
    position_error_sample_variance_m2: float
    n_episodes: int = Field(ge=0)
    seed: int
    checkpoint: str = ""


class ForceStatsRow(BaseModel):
    variant: str
    variation: str
    channel: str  # "0".."3" or "all"
    mean: float
    variance: float
    samples: int


class CurveRow(BaseModel):
    """Learning curve point aggregated across seeds."""

    iteration: int
    env_steps: int
    seeds: int
    reward_mean: float
    reward_variance: float
    success_mean: float
    success_variance: float
