from app.schemas.results import CurveRow, EpisodeOutcome, EvalReport, ForceStatsRow, MetricsRow, ResultsRow
from app.schemas.run import RunConfig
from app.schemas.sensor import SensorConfig
from app.schemas.sweep import SweepSpec
from app.schemas.task import EnvConfig, ForceVariant, RewardWeights, TaskConfig
from app.schemas.train import BaselineVariant, NetworkConfig, TrainConfig
from app.schemas.world import GeometryProfile, WorldConfig

__all__ = [
    "BaselineVariant",
    "CurveRow",
    "EnvConfig",
    "EpisodeOutcome",
    "EvalReport",
    "ForceStatsRow",
    "ForceVariant",
    "GeometryProfile",
    "MetricsRow",
    "NetworkConfig",
    "ResultsRow",
    "RewardWeights",
    "RunConfig",
    "SensorConfig",
    "SweepSpec",
    "TaskConfig",
    "TrainConfig",
    "WorldConfig",
]
