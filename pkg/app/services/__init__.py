from app.services.physics import world_reset, world_step
from app.services.scoring import check_termination, compute_reward
from app.services.sensing import delta, sense, ternarize
from app.services.variations import apply_variation

__all__ = [
    "apply_variation",
    "check_termination",
    "compute_reward",
    "delta",
    "sense",
    "ternarize",
    "world_reset",
    "world_step",
]
