"""Dense networks with analytic backprop, a diagonal Gaussian head and Adam.

Parameters live in float64 in memory; serialization stores little-endian
float32. Hidden layers use tanh, the output layer is linear.
"""
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from app.core.errors import IntegrityError, ShapeError

LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0
LOG_2PI = math.log(2.0 * math.pi)

SERIAL_MAGIC = b"CGNN"
SERIAL_VERSION = 1
_HEADER = struct.Struct("<4sHH")
_U32 = struct.Struct("<I")


class Mlp:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ShapeError("an MLP needs one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {i}: input dim {w.shape[0]} != previous output {weights[i - 1].shape[1]}")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @classmethod
    def init(cls, dims: tuple[int, ...], rng: np.random.Generator, output_gain: float = 1.0) -> "Mlp":
        """Scaled-normal weights (1/sqrt(fan_in)), zero biases; the last layer is scaled by output_gain."""
        if len(dims) < 2:
            raise ShapeError(f"need at least input and output dims, got {dims}")
        weights, biases = [], []
        for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
            gain = output_gain if i == len(dims) - 2 else 1.0
            weights.append(rng.standard_normal((n_in, n_out)) * (gain / math.sqrt(n_in)))
            biases.append(np.zeros(n_out))
        return cls(weights, biases)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]; arrays are the live ones."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return mlp_forward(self, x)[0]


@dataclass(frozen=True)
class MlpCache:
    # Input to every layer; inputs[l + 1] is the tanh output of hidden layer l
    inputs: tuple[np.ndarray, ...]
    dims: tuple[int, ...]


def mlp_forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.dims[0]:
        raise ShapeError(f"input shape {x.shape} does not fit an MLP with input dim {net.dims[0]}")
    inputs = [x]
    h = x
    last = net.n_layers - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < last:
            h = np.tanh(h)
            inputs.append(h)
    return h, MlpCache(inputs=tuple(inputs), dims=net.dims)


def mlp_backward(net: Mlp, cache: MlpCache, grad_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Parameter gradients (same order as Mlp.params()) and the input gradient."""
    g = np.asarray(grad_out, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    batch = cache.inputs[0].shape[0]
    if cache.dims != net.dims or g.shape != (batch, net.dims[-1]):
        raise ShapeError(f"output gradient {g.shape} does not match cached forward pass ({batch}, {net.dims[-1]})")
    grads: list[np.ndarray] = [np.empty(0)] * (2 * net.n_layers)
    for i in reversed(range(net.n_layers)):
        if i < net.n_layers - 1:
            a = cache.inputs[i + 1]
            g = g * (1.0 - a * a)
        x = cache.inputs[i]
        grads[2 * i] = x.T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ net.weights[i].T
    return grads, g


# ---------- diagonal Gaussian head ----------

@dataclass
class GaussianHead:
    log_std: np.ndarray

    def __post_init__(self):
        self.log_std = np.asarray(self.log_std, dtype=np.float64)
        self.clamp()

    def clamp(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    @property
    def dim(self) -> int:
        return self.log_std.shape[0]


def gaussian_log_prob(mean: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    mean = np.atleast_2d(mean)
    actions = np.atleast_2d(actions)
    if mean.shape != actions.shape or mean.shape[1] != log_std.shape[0]:
        raise ShapeError(f"mean {mean.shape}, actions {actions.shape} and log_std {log_std.shape} disagree")
    z = (actions - mean) * np.exp(-log_std)
    return -0.5 * np.sum(z * z + 2.0 * log_std + LOG_2PI, axis=1)


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 * (1.0 + LOG_2PI)))


def gaussian_sample(mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mean = np.atleast_2d(mean)
    return mean + np.exp(log_std) * rng.standard_normal(mean.shape)


def gaussian_logprob_sample_entropy(
    head: GaussianHead,
    mean: np.ndarray,
    rng: np.random.Generator,
    actions: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Samples from `rng` when `actions` is None, otherwise their log-probs; always with the head's entropy."""
    entropy = gaussian_entropy(head.log_std)
    if actions is None:
        return gaussian_sample(mean, head.log_std, rng), entropy
    return gaussian_log_prob(mean, head.log_std, actions), entropy


# ---------- optimization ----------

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], t=0)


def adam_update(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam step; inputs are left untouched."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError("params, grads and Adam moments must have the same length")
    t = state.t + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"gradient {g.shape} / moment {m.shape} do not match parameter {p.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_params.append(p - (lr / bc1) * m / (np.sqrt(v / bc2) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=new_m, v=new_v, t=t)


class Adam:
    """Adam over a fixed parameter list, updating the arrays in place."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like(params)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        updated, self.state = adam_update(params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
        for p, new in zip(params, updated):
            p[...] = new


def global_norm(grads: list[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    norm = global_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        return [g * scale for g in grads], norm
    return grads, norm


# ---------- serialization ----------

def serialize_mlp(net: Mlp, log_std: np.ndarray | None = None) -> bytes:
    """Header (magic, version, layer count, dims, log_std length) then float32 W/b per layer and log_std."""
    log_std = np.zeros(0) if log_std is None else np.asarray(log_std)
    parts = [_HEADER.pack(SERIAL_MAGIC, SERIAL_VERSION, net.n_layers)]
    parts.extend(_U32.pack(d) for d in net.dims)
    parts.append(_U32.pack(log_std.shape[0]))
    for w, b in zip(net.weights, net.biases):
        parts.append(w.astype("<f4").tobytes(order="C"))
        parts.append(b.astype("<f4").tobytes())
    parts.append(log_std.astype("<f4").tobytes())
    return b"".join(parts)


def deserialize_mlp(blob: bytes) -> tuple[Mlp, np.ndarray | None]:
    try:
        magic, version, n_layers = _HEADER.unpack_from(blob, 0)
    except struct.error as exc:
        raise IntegrityError("network blob shorter than its header") from exc
    if magic != SERIAL_MAGIC:
        raise IntegrityError(f"bad network magic {magic!r}")
    if version != SERIAL_VERSION:
        raise IntegrityError(f"unsupported network format version {version}")
    offset = _HEADER.size
    try:
        dims = [_U32.unpack_from(blob, offset + 4 * i)[0] for i in range(n_layers + 1)]
        offset += 4 * (n_layers + 1)
        (n_log_std,) = _U32.unpack_from(blob, offset)
        offset += 4
    except struct.error as exc:
        raise IntegrityError("network blob truncated in dims") from exc

    expected = offset + 4 * (sum(a * b + b for a, b in zip(dims[:-1], dims[1:])) + n_log_std)
    if len(blob) != expected:
        raise IntegrityError(f"network blob is {len(blob)} bytes, header implies {expected}")

    def take(count: int) -> np.ndarray:
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).astype(np.float64)
        offset += 4 * count
        return arr

    weights, biases = [], []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        weights.append(take(n_in * n_out).reshape(n_in, n_out))
        biases.append(take(n_out))
    log_std = take(n_log_std) if n_log_std else None
    return Mlp(weights, biases), log_std
