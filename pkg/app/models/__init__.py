from app.models.forces import DeltaForce, ForceFrame, TernaryFrame
from app.models.observation import AgentAction, AgentObservation, Outcome, PrivilegedObservation, RewardBreakdown, StepResult
from app.models.world import AgentControl, ContactPoint, GripperState, RodState, WorldState

__all__ = [
    "AgentAction",
    "AgentControl",
    "AgentObservation",
    "ContactPoint",
    "DeltaForce",
    "ForceFrame",
    "GripperState",
    "Outcome",
    "PrivilegedObservation",
    "RewardBreakdown",
    "RodState",
    "StepResult",
    "TernaryFrame",
    "WorldState",
]
