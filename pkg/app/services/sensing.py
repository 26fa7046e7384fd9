"""Force sensor model and the delta / ternary force representations."""
import numpy as np

from app.core.errors import InputError, SequencingError, ShapeError
from app.models.forces import CHANNELS, DeltaForce, ForceFrame, TernaryFrame
from app.schemas.sensor import SensorConfig
from app.services.physics import N_AGENTS


def _as_channels(true_forces) -> np.ndarray:
    arr = np.asarray(true_forces, dtype=float)
    if arr.size != N_AGENTS * CHANNELS:
        raise ShapeError(f"expected {N_AGENTS}x{CHANNELS} force values, got shape {arr.shape}")
    return arr.reshape(N_AGENTS, CHANNELS)


def sense(
    true_forces,
    config: SensorConfig,
    rng: np.random.Generator,
    t: int = 0,
) -> ForceFrame:
    """gain * true + bias + N(0, noise_std^2), per channel, with the noise drawn from `rng`."""
    values = config.gain * _as_channels(true_forces) + config.bias
    if config.noise_std > 0.0:
        values = values + rng.normal(0.0, config.noise_std, size=values.shape)
    return ForceFrame(values=values, t=t)


def delta(current: ForceFrame, previous: ForceFrame) -> DeltaForce:
    if current.values.shape != previous.values.shape:
        raise ShapeError(f"frame shapes differ: {current.values.shape} vs {previous.values.shape}")
    if current.t != previous.t + 1:
        raise SequencingError(f"frames are not consecutive: t={previous.t} then t={current.t}")
    return DeltaForce(values=current.values - previous.values, t=current.t)


def ternarize_array(values: np.ndarray, epsilon: float) -> np.ndarray:
    if epsilon < 0.0:
        raise InputError(f"deadband epsilon must be >= 0, got {epsilon}")
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape, dtype=np.int8)
    out[values > epsilon] = 1
    out[values < -epsilon] = -1
    return out


def ternarize(d: DeltaForce, epsilon: float) -> TernaryFrame:
    return TernaryFrame(values=ternarize_array(d.values, epsilon), t=d.t)


class ForceHistory:
    """Previous sensed frame, so each new frame yields its delta and ternary form."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        self._previous: ForceFrame | None = None

    def reset(self, first: ForceFrame) -> tuple[DeltaForce, TernaryFrame]:
        # Seed with a copy of the first frame so the first delta is zero
        self._previous = ForceFrame(values=first.values.copy(), t=first.t - 1)
        return self.push(first)

    def push(self, frame: ForceFrame) -> tuple[DeltaForce, TernaryFrame]:
        if self._previous is None:
            return self.reset(frame)
        d = delta(frame, self._previous)
        self._previous = frame
        return d, ternarize(d, self.epsilon)
