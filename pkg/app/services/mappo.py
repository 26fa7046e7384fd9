"""MAPPO with per-agent actors and critics under centralized training.

Actors see their own 18-channel observation; critics see both agents'
observations and, for the delta-force variant, both agents' delta forces.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.core.errors import CompositionError, ShapeError, TrainingAbortedError
from app.models.observation import (
    ACTION_DIM,
    DELTA_DIM,
    FORCE_SLICE,
    NON_FORCE_DIM,
    OBS_DIM,
    AgentObservation,
    Outcome,
    RewardBreakdown,
)
from app.schemas.task import ForceVariant
from app.schemas.train import BaselineVariant, TrainConfig
from app.services.env import CoopGraspEnv
from app.services.neural import (
    Adam,
    GaussianHead,
    Mlp,
    clip_grad_norm,
    gaussian_entropy,
    gaussian_log_prob,
    gaussian_sample,
    mlp_backward,
    mlp_forward,
)
from app.services.physics import N_AGENTS
from app.services.seeding import EPISODE, POLICY_INIT, derive_seed, make_rng

logger = logging.getLogger(__name__)

GLOBAL_STATE_DIM = 3 + 8  # rod linear + angular velocity, true finger forces

# Channel kinds for observation normalization
RUNNING = 0  # running mean / std
FIXED = 1  # divided by the fixed force scale
PASS = 2  # left as is


# ---------- input composition ----------

def build_actor_input(observation: AgentObservation, variant: BaselineVariant) -> np.ndarray:
    if observation.force_variant is not variant.actor_force_variant:
        raise CompositionError(
            f"observation carries {observation.force_variant.value} force channels, "
            f"variant {variant.value} expects {variant.actor_force_variant.value}"
        )
    values = observation.values.copy()
    if variant is BaselineVariant.NO_FORCE:
        values[FORCE_SLICE] = 0.0
    return values


def critic_input_dim(variant: BaselineVariant, global_state: bool = False) -> int:
    dim = N_AGENTS * OBS_DIM
    if variant.critic_uses_delta:
        dim += N_AGENTS * DELTA_DIM
    if global_state:
        dim += GLOBAL_STATE_DIM
    return dim


def build_critic_input(
    observations,
    deltas,
    variant: BaselineVariant,
    global_state: np.ndarray | None = None,
) -> np.ndarray:
    """Both agents' actor inputs, then both delta vectors for the delta-force variant."""
    observations = list(observations) if observations is not None else []
    if len(observations) != N_AGENTS:
        raise CompositionError(f"critic input needs {N_AGENTS} agent observations, got {len(observations)}")
    parts = [build_actor_input(o, variant) for o in observations]
    if variant.critic_uses_delta:
        if deltas is None:
            raise CompositionError("delta forces of both agents are required for this variant")
        d = np.asarray(deltas, dtype=float)
        if d.shape != (N_AGENTS, DELTA_DIM):
            raise CompositionError(f"expected delta forces of shape ({N_AGENTS}, {DELTA_DIM}), got {d.shape}")
        parts.append(d.reshape(-1))
    if global_state is not None:
        parts.append(np.asarray(global_state, dtype=float).reshape(GLOBAL_STATE_DIM))
    return np.concatenate(parts)


def _obs_kinds(variant: BaselineVariant) -> np.ndarray:
    kinds = np.full(OBS_DIM, RUNNING, dtype=np.int8)
    if variant.actor_force_variant is ForceVariant.RAW:
        kinds[FORCE_SLICE] = FIXED
    else:
        kinds[FORCE_SLICE] = PASS
    return kinds


def actor_channel_kinds(variant: BaselineVariant) -> np.ndarray:
    return _obs_kinds(variant)


def critic_channel_kinds(variant: BaselineVariant, global_state: bool = False) -> np.ndarray:
    parts = [_obs_kinds(variant)] * N_AGENTS
    if variant.critic_uses_delta:
        parts.append(np.full(N_AGENTS * DELTA_DIM, FIXED, dtype=np.int8))
    if global_state:
        parts.append(np.array([RUNNING] * 3 + [FIXED] * 8, dtype=np.int8))
    return np.concatenate(parts)


class ObservationNormalizer:
    """Running mean/std on RUNNING channels, fixed force scale on FIXED ones, PASS untouched."""

    def __init__(self, kinds: np.ndarray, force_scale: float = 10.0, enabled: bool = True, clip: float = 10.0):
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.force_scale = force_scale
        self.enabled = enabled
        self.clip = clip
        self.frozen = False
        dim = self.kinds.shape[0]
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 0.0

    @property
    def dim(self) -> int:
        return self.kinds.shape[0]

    def update(self, batch: np.ndarray) -> None:
        if self.frozen or not self.enabled:
            return
        batch = np.atleast_2d(np.asarray(batch, dtype=float))
        if batch.shape[1] != self.dim:
            raise ShapeError(f"normalizer expects {self.dim} channels, got {batch.shape[1]}")
        n = batch.shape[0]
        if n == 0:
            return
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        total = self.count + n
        diff = b_mean - self.mean
        self.mean = self.mean + diff * (n / total)
        m2 = self.var * self.count + b_var * n + diff * diff * (self.count * n / total)
        self.var = m2 / total
        self.count = total

    def normalize(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = x.copy()
        fixed = self.kinds == FIXED
        out[..., fixed] = x[..., fixed] / self.force_scale
        if self.enabled:
            running = self.kinds == RUNNING
            scaled = (x[..., running] - self.mean[running]) / np.sqrt(self.var[running] + 1e-8)
            out[..., running] = np.clip(scaled, -self.clip, self.clip)
        return out

    def state_dict(self) -> dict:
        return {
            "kinds": self.kinds.tolist(),
            "force_scale": self.force_scale,
            "enabled": self.enabled,
            "clip": self.clip,
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "count": self.count,
        }

    @classmethod
    def from_state(cls, state: dict) -> "ObservationNormalizer":
        norm = cls(np.array(state["kinds"]), state["force_scale"], state["enabled"], state["clip"])
        norm.mean = np.array(state["mean"], dtype=float)
        norm.var = np.array(state["var"], dtype=float)
        norm.count = float(state["count"])
        return norm


# ---------- networks ----------

class Actor:
    def __init__(self, net: Mlp, head: GaussianHead):
        self.net = net
        self.head = head

    @classmethod
    def init(cls, in_dim: int, hidden: tuple[int, ...], rng: np.random.Generator, init_log_std: float, gain: float):
        net = Mlp.init((in_dim, *hidden, ACTION_DIM), rng, output_gain=gain)
        return cls(net, GaussianHead(np.full(ACTION_DIM, init_log_std)))

    def mean(self, x: np.ndarray) -> np.ndarray:
        return self.net(x)

    def act(self, x: np.ndarray, rng: np.random.Generator | None, deterministic: bool = False):
        """(actions, log-probs) for a batch of normalized inputs."""
        mean = self.net(x)
        actions = mean if deterministic else gaussian_sample(mean, self.head.log_std, rng)
        return actions, gaussian_log_prob(mean, self.head.log_std, actions)

    def params(self) -> list[np.ndarray]:
        return self.net.params() + [self.head.log_std]


class Critic:
    def __init__(self, net: Mlp):
        self.net = net

    @classmethod
    def init(cls, in_dim: int, hidden: tuple[int, ...], rng: np.random.Generator):
        return cls(Mlp.init((in_dim, *hidden, 1), rng))

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.net(x)[:, 0]

    def params(self) -> list[np.ndarray]:
        return self.net.params()


class AgentTeam:
    """Actors, critics, optimizers and normalizers of both agents."""

    def __init__(
        self,
        variant: BaselineVariant,
        config: TrainConfig,
        actors: list[Actor],
        critics: list[Critic],
        actor_norm: ObservationNormalizer,
        critic_norm: ObservationNormalizer,
    ):
        self.variant = variant
        self.config = config
        self.actors = actors
        self.critics = critics
        self.actor_norm = actor_norm
        self.critic_norm = critic_norm
        self.actor_opts = [Adam(a.params(), config.actor_lr) for a in self._unique(actors)]
        self.critic_opts = [Adam(c.params(), config.critic_lr) for c in self._unique(critics)]

    @staticmethod
    def _unique(items: list) -> list:
        out = []
        for item in items:
            if not any(item is o for o in out):
                out.append(item)
        return out

    @classmethod
    def create(cls, variant: BaselineVariant, config: TrainConfig, seed: int) -> "AgentTeam":
        net_cfg = config.network
        critic_dim = critic_input_dim(variant, net_cfg.critic_global_state)
        actors, critics = [], []
        for i in range(N_AGENTS):
            if net_cfg.share_weights and i > 0:
                actors.append(actors[0])
                critics.append(critics[0])
                continue
            rng = make_rng(seed, POLICY_INIT, i)
            actors.append(Actor.init(OBS_DIM, net_cfg.actor_hidden, rng, net_cfg.init_log_std, net_cfg.actor_output_gain))
            critics.append(Critic.init(critic_dim, net_cfg.critic_hidden, rng))
        enabled = config.normalize_observations
        scale = config.force_scale_constant
        return cls(
            variant,
            config,
            actors,
            critics,
            ObservationNormalizer(actor_channel_kinds(variant), scale, enabled),
            ObservationNormalizer(critic_channel_kinds(variant, net_cfg.critic_global_state), scale, enabled),
        )

    def act(self, actor_inputs: np.ndarray, rng: np.random.Generator | None, deterministic: bool = False):
        """actor_inputs (N_AGENTS, OBS_DIM) raw -> actions (N_AGENTS, 3), log-probs (N_AGENTS,)."""
        x = self.actor_norm.normalize(actor_inputs)
        actions = np.empty((N_AGENTS, ACTION_DIM))
        logp = np.empty(N_AGENTS)
        for i, actor in enumerate(self.actors):
            a, lp = actor.act(x[i : i + 1], rng, deterministic)
            actions[i] = a[0]
            logp[i] = lp[0]
        return actions, logp

    def values(self, critic_input: np.ndarray) -> np.ndarray:
        x = self.critic_norm.normalize(critic_input)[None, :]
        return np.array([c.value(x)[0] for c in self.critics])

    def freeze(self) -> None:
        self.actor_norm.frozen = True
        self.critic_norm.frozen = True


# ---------- advantage estimation ----------

def compute_gae(rewards, values, dones, bootstrap, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """GAE over a leading time axis; trailing axes (envs, agents) are independent series."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ShapeError(f"rewards {rewards.shape}, values {values.shape}, dones {dones.shape} must match")
    bootstrap = np.broadcast_to(np.asarray(bootstrap, dtype=float), rewards.shape[1:])
    advantages = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1:])
    next_value = bootstrap
    for t in reversed(range(rewards.shape[0])):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        last = delta + gamma * lam * not_done * last
        advantages[t] = last
        next_value = values[t]
    return advantages, advantages + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    if adv.size < 2:
        return adv - adv.mean() if adv.size else adv
    return (adv - adv.mean()) / (adv.std() + 1e-8)


# ---------- losses ----------

@dataclass
class ActorLoss:
    loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float
    grads: list[np.ndarray]  # Mlp params then log_std


def ppo_losses(
    actor: Actor,
    obs: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_eps: float,
    entropy_coef: float,
) -> ActorLoss:
    """Clipped surrogate loss and its analytic gradient w.r.t. the actor parameters."""
    mean, cache = mlp_forward(actor.net, obs)
    log_std = actor.head.log_std
    logp = gaussian_log_prob(mean, log_std, actions)
    ratio = np.exp(logp - old_log_probs)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    entropy = gaussian_entropy(log_std)
    n = obs.shape[0]
    loss = -float(np.mean(np.minimum(surr1, surr2))) - entropy_coef * entropy

    # d loss / d logp per sample; zero where the clipped branch is active
    g_logp = -np.where(surr1 <= surr2, surr1, 0.0) / n
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    g_mean = g_logp[:, None] * diff * inv_var
    z2 = diff * diff * inv_var
    g_log_std = (g_logp[:, None] * (z2 - 1.0)).sum(axis=0) - entropy_coef
    grads, _ = mlp_backward(actor.net, cache, g_mean)
    return ActorLoss(
        loss=loss,
        entropy=entropy,
        approx_kl=float(np.mean(old_log_probs - logp)),
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_eps)),
        grads=grads + [g_log_std],
    )


def value_loss(critic: Critic, obs: np.ndarray, returns: np.ndarray, value_coef: float) -> tuple[float, list[np.ndarray]]:
    out, cache = mlp_forward(critic.net, obs)
    err = out[:, 0] - returns
    loss = value_coef * float(np.mean(err * err))
    grad_out = (2.0 * value_coef / obs.shape[0]) * err[:, None]
    grads, _ = mlp_backward(critic.net, cache, grad_out)
    return loss, grads


# ---------- rollouts ----------

@dataclass
class RolloutBuffer:
    """Series of shape (T, E, N_AGENTS, ...) collected under one policy snapshot."""

    actor_obs: np.ndarray
    critic_obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    bootstrap_values: np.ndarray  # (E, N_AGENTS)
    raw_actor_obs: np.ndarray
    raw_critic_obs: np.ndarray  # (T, E, critic_dim)
    term_means: np.ndarray  # (6,) mean reward term over steps and agents
    episode_returns: list[float] = field(default_factory=list)
    episode_outcomes: list[Outcome] = field(default_factory=list)

    @property
    def length(self) -> int:
        return self.rewards.shape[0] * self.rewards.shape[1]

    def agent_batch(self, agent: int, advantages: np.ndarray, returns: np.ndarray) -> dict[str, np.ndarray]:
        """Flattened (T * E, ...) arrays of one agent."""
        flat = lambda a: a[:, :, agent].reshape(self.length, *a.shape[3:])  # noqa: E731
        return {
            "actor_obs": flat(self.actor_obs),
            "critic_obs": flat(self.critic_obs),
            "actions": flat(self.actions),
            "log_probs": flat(self.log_probs),
            "advantages": flat(advantages),
            "returns": flat(returns),
        }


class VecEnv:
    """E independent environments with auto-reset and seeded episode streams."""

    def __init__(self, envs: list[CoopGraspEnv], seed: int):
        self.envs = envs
        self.seed = seed
        self.episode_index = [0] * len(envs)
        self.current = [None] * len(envs)
        self.episode_return = [0.0] * len(envs)
        for i in range(len(envs)):
            self._reset(i)

    def _reset(self, i: int) -> None:
        episode_seed = derive_seed(self.seed, EPISODE, i, self.episode_index[i])
        self.episode_index[i] += 1
        observations, _ = self.envs[i].reset(episode_seed)
        self.current[i] = (observations, self.envs[i].delta.values.copy())
        self.episode_return[i] = 0.0

    def __len__(self) -> int:
        return len(self.envs)


def _critic_input(team: AgentTeam, env: CoopGraspEnv, observations, deltas) -> np.ndarray:
    global_state = env.global_state() if team.config.network.critic_global_state else None
    return build_critic_input(observations, deltas, team.variant, global_state)


def collect_rollout(vec: VecEnv, team: AgentTeam, length: int, rng: np.random.Generator) -> RolloutBuffer:
    """T steps from every env with the team frozen; timeouts bootstrap from the final critic value."""
    e = len(vec)
    gamma = team.config.gamma
    critic_dim = team.critic_norm.dim
    shape = (length, e, N_AGENTS)
    raw_actor = np.zeros((*shape, OBS_DIM))
    actor_obs = np.zeros((*shape, OBS_DIM))
    raw_critic = np.zeros((length, e, critic_dim))
    critic_obs = np.zeros((*shape, critic_dim))
    actions = np.zeros((*shape, ACTION_DIM))
    log_probs = np.zeros(shape)
    rewards = np.zeros(shape)
    values = np.zeros(shape)
    dones = np.zeros(shape)
    term_sum = np.zeros(len(RewardBreakdown.TERMS))
    returns: list[float] = []
    outcomes: list[Outcome] = []

    for t in range(length):
        for i, env in enumerate(vec.envs):
            observations, deltas = vec.current[i]
            a_in = np.stack([build_actor_input(o, team.variant) for o in observations])
            c_in = _critic_input(team, env, observations, deltas)
            act, logp = team.act(a_in, rng)
            raw_actor[t, i] = a_in
            actor_obs[t, i] = team.actor_norm.normalize(a_in)
            raw_critic[t, i] = c_in
            critic_obs[t, i] = team.critic_norm.normalize(c_in)
            actions[t, i] = act
            log_probs[t, i] = logp
            values[t, i] = team.values(c_in)

            result = env.step(act)
            r = np.array([rb.total for rb in result.rewards])
            term_sum += np.mean([rb.terms() for rb in result.rewards], axis=0)
            vec.episode_return[i] += float(r.mean())
            if result.truncated:
                final_in = _critic_input(team, env, result.observations, result.deltas)
                r = r + gamma * team.values(final_in)
            rewards[t, i] = r
            if result.done:
                dones[t, i] = 1.0
                returns.append(vec.episode_return[i])
                outcomes.append(result.outcome)
                vec._reset(i)
            else:
                vec.current[i] = (result.observations, result.deltas)

    bootstrap = np.zeros((e, N_AGENTS))
    for i, env in enumerate(vec.envs):
        observations, deltas = vec.current[i]
        bootstrap[i] = team.values(_critic_input(team, env, observations, deltas))

    return RolloutBuffer(
        actor_obs=actor_obs,
        critic_obs=critic_obs,
        actions=actions,
        log_probs=log_probs,
        rewards=rewards,
        values=values,
        dones=dones,
        bootstrap_values=bootstrap,
        raw_actor_obs=raw_actor,
        raw_critic_obs=raw_critic,
        term_means=term_sum / max(1, length * e),
        episode_returns=returns,
        episode_outcomes=outcomes,
    )


# ---------- update ----------

@dataclass
class UpdateStats:
    actor_loss: float
    critic_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float
    actor_grad_norm: float = 0.0
    critic_grad_norm: float = 0.0


def _check_finite(name: str, value: float) -> None:
    if not np.isfinite(value):
        raise TrainingAbortedError(f"non-finite {name} ({value}) during PPO update")


def ppo_update(team: AgentTeam, buffer: RolloutBuffer, rng: np.random.Generator) -> UpdateStats:
    """Epochs of minibatch PPO-clip on each agent's actor and critic, each with its own Adam."""
    cfg = team.config
    advantages, returns = compute_gae(
        buffer.rewards, buffer.values, buffer.dones, buffer.bootstrap_values, cfg.gamma, cfg.gae_lambda
    )
    n = buffer.length
    mb_size = max(1, n // cfg.minibatches)
    sums = np.zeros(7)
    count = 0
    unique_actors = AgentTeam._unique(team.actors)
    unique_critics = AgentTeam._unique(team.critics)

    for agent in range(N_AGENTS):
        batch = buffer.agent_batch(agent, advantages, returns)
        adv = normalize_advantages(batch["advantages"])
        actor = team.actors[agent]
        critic = team.critics[agent]
        actor_opt = team.actor_opts[next(k for k, a in enumerate(unique_actors) if a is actor)]
        critic_opt = team.critic_opts[next(k for k, c in enumerate(unique_critics) if c is critic)]

        for _ in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, mb_size):
                idx = order[start : start + mb_size]
                pl = ppo_losses(
                    actor,
                    batch["actor_obs"][idx],
                    batch["actions"][idx],
                    batch["log_probs"][idx],
                    adv[idx],
                    cfg.clip_eps,
                    cfg.entropy_coef,
                )
                vl, v_grads = value_loss(critic, batch["critic_obs"][idx], batch["returns"][idx], cfg.value_coef)
                _check_finite("actor loss", pl.loss)
                _check_finite("critic loss", vl)

                a_grads, a_norm = clip_grad_norm(pl.grads, cfg.max_grad_norm)
                c_grads, c_norm = clip_grad_norm(v_grads, cfg.max_grad_norm)
                actor_opt.step(actor.params(), a_grads)
                actor.head.clamp()
                critic_opt.step(critic.params(), c_grads)

                sums += (pl.loss, vl, pl.entropy, pl.approx_kl, pl.clip_fraction, a_norm, c_norm)
                count += 1

    for net in unique_actors:
        if not all(np.all(np.isfinite(p)) for p in net.params()):
            raise TrainingAbortedError("actor parameters became non-finite")
    means = sums / max(1, count)
    return UpdateStats(*map(float, means))
