import numpy as np
import pytest

from app.core.errors import CompositionError, ShapeError
from app.models.observation import FORCE_SLICE, OBS_DIM, OBS_LAYOUT, AgentObservation
from app.schemas.task import EnvConfig, ForceVariant, TaskConfig
from app.schemas.train import BaselineVariant, NetworkConfig, TrainConfig
from app.schemas.world import WorldConfig
from app.services.env import CoopGraspEnv
from app.services.mappo import (
    Actor,
    AgentTeam,
    Critic,
    ObservationNormalizer,
    VecEnv,
    actor_channel_kinds,
    build_actor_input,
    build_critic_input,
    collect_rollout,
    compute_gae,
    critic_channel_kinds,
    critic_input_dim,
    normalize_advantages,
    ppo_losses,
    ppo_update,
    value_loss,
)
from app.services.neural import Adam, gaussian_log_prob

TINY = TrainConfig(
    num_envs=1,
    rollout_length=5,
    total_env_steps=5,
    epochs=1,
    minibatches=1,
    network=NetworkConfig(actor_hidden=(8,), critic_hidden=(8,)),
)


def _obs(variant: ForceVariant, force=(1.0, -1.0, 0.0, 0.0), fill=0.5) -> AgentObservation:
    values = np.full(OBS_DIM, fill)
    values[FORCE_SLICE] = force
    return AgentObservation(values=values, force_variant=variant)


def _vec(variant: BaselineVariant, seed=0, num_envs=1) -> VecEnv:
    task = TaskConfig(horizon=4, force_variant=variant.actor_force_variant)
    return VecEnv([CoopGraspEnv(EnvConfig(task=task)) for _ in range(num_envs)], seed)


# ---------- input composition ----------

def test_actor_input_passes_ternary_channels_through():
    x = build_actor_input(_obs(ForceVariant.TERNARY), BaselineVariant.OURS)
    assert x[FORCE_SLICE].tolist() == [1.0, -1.0, 0.0, 0.0]


def test_actor_input_without_force_is_zero_filled():
    obs = _obs(ForceVariant.NONE, force=(3.0, 2.0, 1.0, 4.0))
    assert np.all(build_actor_input(obs, BaselineVariant.NO_FORCE)[FORCE_SLICE] == 0.0)


def test_actor_input_non_force_prefix_is_shared():
    a = build_actor_input(_obs(ForceVariant.TERNARY), BaselineVariant.TERNARY_FORCE)
    b = build_actor_input(_obs(ForceVariant.RAW, force=(5.0, 1.0, 2.0, 3.0)), BaselineVariant.RAW_FORCE)
    assert np.array_equal(a[:14], b[:14])


def test_actor_input_rejects_mismatched_variant():
    with pytest.raises(CompositionError):
        build_actor_input(_obs(ForceVariant.RAW), BaselineVariant.OURS)


def test_critic_input_with_deltas():
    obs = [_obs(ForceVariant.TERNARY), _obs(ForceVariant.TERNARY, fill=0.25)]
    x = build_critic_input(obs, np.zeros((2, 4)), BaselineVariant.OURS)
    assert x.shape == (44,) == (critic_input_dim(BaselineVariant.OURS),)
    assert np.all(x[36:] == 0.0)
    assert np.array_equal(x[:OBS_DIM], obs[0].values) and np.array_equal(x[OBS_DIM:36], obs[1].values)
    deltas = np.arange(8.0).reshape(2, 4)
    assert build_critic_input(obs, deltas, BaselineVariant.OURS)[36:].tolist() == list(range(8))


@pytest.mark.parametrize(
    "variant,force_variant",
    [
        (BaselineVariant.RAW_FORCE, ForceVariant.RAW),
        (BaselineVariant.TERNARY_FORCE, ForceVariant.TERNARY),
        (BaselineVariant.NO_FORCE, ForceVariant.NONE),
    ],
)
def test_baseline_critics_see_observations_only(variant, force_variant):
    obs = [_obs(force_variant, force=(2.5, 0.3, 0.0, -1.0))] * 2
    x = build_critic_input(obs, None, variant)
    assert x.shape == (36,) == (critic_input_dim(variant),)


def test_raw_critic_input_has_raw_forces_not_ternary():
    obs = [_obs(ForceVariant.RAW, force=(2.5, 0.3, 0.0, -1.0))] * 2
    x = build_critic_input(obs, np.ones((2, 4)), BaselineVariant.RAW_FORCE)
    assert x[FORCE_SLICE].tolist() == [2.5, 0.3, 0.0, -1.0]


def test_critic_input_needs_both_agents_and_deltas():
    one = [_obs(ForceVariant.TERNARY)]
    with pytest.raises(CompositionError):
        build_critic_input(one, np.zeros((2, 4)), BaselineVariant.OURS)
    with pytest.raises(CompositionError):
        build_critic_input(one * 2, None, BaselineVariant.OURS)
    with pytest.raises(CompositionError):
        build_critic_input(one * 2, np.zeros((1, 4)), BaselineVariant.OURS)


def test_critic_global_state_is_appended():
    obs = [_obs(ForceVariant.TERNARY)] * 2
    x = build_critic_input(obs, np.zeros((2, 4)), BaselineVariant.OURS, global_state=np.ones(11))
    assert x.shape == (55,) == (critic_input_dim(BaselineVariant.OURS, global_state=True),)


def test_actor_input_excludes_delta_channels_in_every_variant():
    for variant in BaselineVariant:
        assert actor_channel_kinds(variant).size == OBS_DIM
        assert critic_channel_kinds(variant).size == critic_input_dim(variant)


# ---------- normalization ----------

def test_normalizer_keeps_ternary_and_scales_forces():
    norm = ObservationNormalizer(critic_channel_kinds(BaselineVariant.OURS), force_scale=10.0)
    rng = np.random.default_rng(0)
    batch = rng.normal(3.0, 2.0, size=(500, 44))
    batch[:, FORCE_SLICE] = rng.integers(-1, 2, size=(500, 4))
    norm.update(batch)
    out = norm.normalize(batch)
    assert np.array_equal(out[:, FORCE_SLICE], batch[:, FORCE_SLICE])
    assert np.allclose(out[:, 36:], batch[:, 36:] / 10.0)
    assert np.allclose(out[:, :14].mean(axis=0), 0.0, atol=1e-9)
    assert np.allclose(out[:, :14].std(axis=0), 1.0, atol=1e-6)


def test_raw_force_channels_use_fixed_scale():
    norm = ObservationNormalizer(actor_channel_kinds(BaselineVariant.RAW_FORCE), force_scale=10.0)
    x = np.zeros(OBS_DIM)
    x[FORCE_SLICE] = [20.0, -5.0, 0.0, 1.0]
    norm.update(np.tile(x, (4, 1)))
    assert norm.normalize(x)[FORCE_SLICE].tolist() == [2.0, -0.5, 0.0, 0.1]


def test_frozen_normalizer_ignores_updates():
    norm = ObservationNormalizer(actor_channel_kinds(BaselineVariant.OURS))
    norm.frozen = True
    norm.update(np.ones((3, OBS_DIM)))
    assert norm.count == 0.0


def test_normalizer_state_round_trip():
    norm = ObservationNormalizer(actor_channel_kinds(BaselineVariant.OURS))
    norm.update(np.random.default_rng(1).normal(size=(20, OBS_DIM)))
    again = ObservationNormalizer.from_state(norm.state_dict())
    x = np.random.default_rng(2).normal(size=OBS_DIM)
    assert np.array_equal(norm.normalize(x), again.normalize(x))


# ---------- advantage estimation ----------

def _brute_force_gae(rewards, values, dones, bootstrap, gamma, lam):
    n = len(rewards)
    next_values = np.append(values[1:], bootstrap)
    deltas = rewards + gamma * next_values * (1 - dones) - values
    adv = np.zeros(n)
    for t in range(n):
        weight = 1.0
        for k in range(t, n):
            adv[t] += weight * deltas[k]
            if dones[k]:
                break
            weight *= gamma * lam
    return adv


def test_gae_with_zero_lambda_is_td_error():
    r = np.array([1.0, 0.5, -0.2])
    v = np.array([0.3, 0.1, 0.4])
    adv, ret = compute_gae(r, v, np.zeros(3), 0.7, gamma=0.9, lam=0.0)
    expected = r + 0.9 * np.array([0.1, 0.4, 0.7]) - v
    assert np.allclose(adv, expected, rtol=0, atol=1e-15)
    assert np.allclose(ret, adv + v)


def test_gae_with_unit_discount_sums_suffix_rewards():
    r = np.array([1.0, 2.0, 3.0, 4.0])
    adv, _ = compute_gae(r, np.zeros(4), np.zeros(4), 0.0, gamma=1.0, lam=1.0)
    assert adv.tolist() == [10.0, 9.0, 7.0, 4.0]


@pytest.mark.parametrize("seed", range(5))
def test_gae_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 33))
    r, v = rng.normal(size=n), rng.normal(size=n)
    dones = (rng.random(n) < 0.15).astype(float)
    bootstrap = float(rng.normal())
    adv, _ = compute_gae(r, v, dones, bootstrap, gamma=0.97, lam=0.9)
    assert np.allclose(adv, _brute_force_gae(r, v, dones, bootstrap, 0.97, 0.9), rtol=0, atol=1e-10)


def test_gae_handles_env_and_agent_axes():
    rng = np.random.default_rng(9)
    r, v = rng.normal(size=(6, 3, 2)), rng.normal(size=(6, 3, 2))
    dones = np.zeros((6, 3, 2))
    dones[2, 1, :] = 1.0
    boot = rng.normal(size=(3, 2))
    adv, _ = compute_gae(r, v, dones, boot, gamma=0.99, lam=0.95)
    for e in range(3):
        for a in range(2):
            single, _ = compute_gae(r[:, e, a], v[:, e, a], dones[:, e, a], boot[e, a], 0.99, 0.95)
            assert np.allclose(adv[:, e, a], single, rtol=0, atol=1e-12)


def test_gae_rejects_length_mismatch():
    with pytest.raises(ShapeError):
        compute_gae(np.zeros(3), np.zeros(4), np.zeros(3), 0.0, 0.99, 0.95)


def test_advantage_normalization():
    adv = normalize_advantages(np.random.default_rng(3).normal(4.0, 7.0, size=256))
    assert abs(adv.mean()) < 1e-6
    assert abs(adv.std() - 1.0) < 1e-6


# ---------- losses ----------

def _actor(seed=0, in_dim=4) -> Actor:
    return Actor.init(in_dim, (6,), np.random.default_rng(seed), init_log_std=-0.3, gain=0.5)


def test_on_policy_ratio_makes_clipped_and_unclipped_equal():
    actor = _actor()
    rng = np.random.default_rng(1)
    obs = rng.normal(size=(16, 4))
    actions = actor.mean(obs) + 0.1 * rng.normal(size=(16, 3))
    logp = gaussian_log_prob(actor.mean(obs), actor.head.log_std, actions)
    adv = rng.normal(size=16)
    out = ppo_losses(actor, obs, actions, logp, adv, clip_eps=0.2, entropy_coef=0.01)
    assert out.clip_fraction == 0.0 and abs(out.approx_kl) < 1e-12
    assert out.loss == pytest.approx(-adv.mean() - 0.01 * out.entropy)


def test_surrogate_uses_clipped_value_for_large_ratio():
    actor = _actor()
    obs = np.zeros((1, 4))
    actions = actor.mean(obs)
    logp = gaussian_log_prob(actor.mean(obs), actor.head.log_std, actions)
    eps = 0.2
    old = logp - np.log(1 + 2 * eps)
    out = ppo_losses(actor, obs, actions, old, np.array([1.5]), clip_eps=eps, entropy_coef=0.0)
    assert out.loss == pytest.approx(-(1 + eps) * 1.5)
    assert out.clip_fraction == 1.0
    assert all(np.all(g == 0.0) for g in out.grads)


def test_surrogate_never_exceeds_unclipped_or_clipped_bound():
    actor = _actor()
    rng = np.random.default_rng(4)
    obs = rng.normal(size=(64, 4))
    actions = rng.normal(size=(64, 3))
    logp = gaussian_log_prob(actor.mean(obs), actor.head.log_std, actions)
    old = logp + rng.normal(0.0, 0.5, size=64)
    adv = rng.normal(size=64)
    ratio = np.exp(logp - old)
    bound = np.maximum(ratio * adv, np.clip(ratio, 0.8, 1.2) * adv)
    out = ppo_losses(actor, obs, actions, old, adv, clip_eps=0.2, entropy_coef=0.0)
    assert -out.loss <= float(np.mean(bound)) + 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_actor_loss_gradient_matches_finite_differences(seed):
    actor = _actor(seed=seed)
    rng = np.random.default_rng(50 + seed)
    obs = rng.normal(size=(12, 4))
    actions = actor.mean(obs) + 0.3 * rng.normal(size=(12, 3))
    logp = gaussian_log_prob(actor.mean(obs), actor.head.log_std, actions)
    # mix of unclipped samples and samples far inside the clipped region
    old = logp + np.concatenate([rng.uniform(-0.05, 0.05, 8), [-1.0, -1.0, 1.0, 1.0]])
    adv = np.concatenate([rng.normal(size=8), [1.0, 2.0, -1.0, -2.0]])

    def loss() -> float:
        return ppo_losses(actor, obs, actions, old, adv, 0.2, 0.01).loss

    grads = ppo_losses(actor, obs, actions, old, adv, 0.2, 0.01).grads
    h = 1e-6
    for param, grad in zip(actor.params(), grads):
        for idx in np.ndindex(param.shape):
            base = param[idx]
            param[idx] = base + h
            up = loss()
            param[idx] = base - h
            down = loss()
            param[idx] = base
            numeric = (up - down) / (2 * h)
            assert abs(grad[idx] - numeric) <= 1e-4 * max(abs(grad[idx]), abs(numeric)) + 1e-8


@pytest.mark.parametrize("seed", range(20))
def test_value_loss_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    in_dim, hidden = int(rng.integers(2, 7)), int(rng.integers(3, 9))
    critic = Critic.init(in_dim, (hidden,), rng)
    obs, returns = rng.normal(size=(10, in_dim)), 3.0 * rng.normal(size=10)
    _, grads = value_loss(critic, obs, returns, value_coef=0.5)
    h = 1e-6
    for param, grad in zip(critic.params(), grads):
        for idx in np.ndindex(param.shape):
            base = param[idx]
            param[idx] = base + h
            up = value_loss(critic, obs, returns, 0.5)[0]
            param[idx] = base - h
            down = value_loss(critic, obs, returns, 0.5)[0]
            param[idx] = base
            numeric = (up - down) / (2 * h)
            assert abs(grad[idx] - numeric) <= 1e-4 * max(abs(grad[idx]), abs(numeric)) + 1e-8


def test_policy_improves_on_a_one_step_bandit():
    actor = _actor(seed=0, in_dim=2)
    opt = Adam(actor.params(), lr=1e-2)
    rng = np.random.default_rng(0)
    target = np.array([0.5, -0.3, 0.2])
    obs = np.ones((64, 2))
    mean_rewards = []
    for _ in range(100):
        actions, logp = actor.act(obs, rng)
        rewards = -np.sum((actions - target) ** 2, axis=1)
        mean_rewards.append(rewards.mean())
        out = ppo_losses(actor, obs, actions, logp, normalize_advantages(rewards), 0.2, 0.0)
        opt.step(actor.params(), out.grads)
        actor.head.clamp()
    assert np.mean(mean_rewards[-10:]) > np.mean(mean_rewards[:10])


# ---------- rollouts and updates ----------

def test_rollout_shapes():
    team = AgentTeam.create(BaselineVariant.OURS, TINY, seed=0)
    buffer = collect_rollout(_vec(BaselineVariant.OURS), team, 5, np.random.default_rng(0))
    assert buffer.rewards.shape == (5, 1, 2) and buffer.length == 5
    assert buffer.critic_obs.shape == (5, 1, 2, 44)
    assert buffer.actor_obs.shape == (5, 1, 2, OBS_DIM)
    assert buffer.bootstrap_values.shape == (1, 2)
    # horizon 4: one episode ends inside the rollout
    assert buffer.dones[:, 0, 0].tolist() == [0.0, 0.0, 0.0, 1.0, 0.0]
    assert len(buffer.episode_outcomes) == 1


def test_rollout_is_deterministic_for_a_fixed_seed():
    buffers = []
    for _ in range(2):
        team = AgentTeam.create(BaselineVariant.RAW_FORCE, TINY, seed=4)
        buffers.append(collect_rollout(_vec(BaselineVariant.RAW_FORCE, seed=4), team, 6, np.random.default_rng(1)))
    a, b = buffers
    for name in ("actor_obs", "critic_obs", "actions", "log_probs", "rewards", "values", "dones"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


def test_stored_log_probs_match_recomputation():
    team = AgentTeam.create(BaselineVariant.OURS, TINY, seed=2)
    buffer = collect_rollout(_vec(BaselineVariant.OURS, num_envs=2), team, 5, np.random.default_rng(3))
    for agent, actor in enumerate(team.actors):
        obs = buffer.actor_obs[:, :, agent].reshape(-1, OBS_DIM)
        actions = buffer.actions[:, :, agent].reshape(-1, 3)
        logp = gaussian_log_prob(actor.mean(obs), actor.head.log_std, actions)
        assert np.allclose(logp, buffer.log_probs[:, :, agent].reshape(-1), atol=1e-6)


def test_ppo_update_changes_each_agent_separately():
    team = AgentTeam.create(BaselineVariant.OURS, TINY, seed=0)
    assert team.actors[0] is not team.actors[1]
    before = [p.copy() for p in team.actors[0].params()]
    buffer = collect_rollout(_vec(BaselineVariant.OURS), team, 5, np.random.default_rng(0))
    stats = ppo_update(team, buffer, np.random.default_rng(1))
    assert all(np.isfinite(v) for v in vars(stats).values())
    assert any(not np.array_equal(a, b) for a, b in zip(before, team.actors[0].params()))
    assert len(team.actor_opts) == 2 and len(team.critic_opts) == 2


def test_shared_weights_use_one_network_pair():
    config = TINY.model_copy(update={"network": NetworkConfig(actor_hidden=(8,), critic_hidden=(8,), share_weights=True)})
    team = AgentTeam.create(BaselineVariant.NO_FORCE, config, seed=0)
    assert team.actors[0] is team.actors[1] and team.critics[0] is team.critics[1]
    assert len(team.actor_opts) == 1
    buffer = collect_rollout(_vec(BaselineVariant.NO_FORCE), team, 5, np.random.default_rng(0))
    ppo_update(team, buffer, np.random.default_rng(1))


def test_global_state_critic_collects():
    config = TINY.model_copy(
        update={"network": NetworkConfig(actor_hidden=(8,), critic_hidden=(8,), critic_global_state=True)}
    )
    team = AgentTeam.create(BaselineVariant.OURS, config, seed=0)
    buffer = collect_rollout(_vec(BaselineVariant.OURS), team, 3, np.random.default_rng(0))
    assert buffer.critic_obs.shape[-1] == 55


def test_briefly_trained_team_keeps_grippers_open_while_approaching():
    config = TINY.model_copy(update={"rollout_length": 150, "total_env_steps": 300})
    team = AgentTeam.create(BaselineVariant.OURS, config, seed=0)
    vec = VecEnv([CoopGraspEnv(EnvConfig(task=TaskConfig(horizon=300)))], seed=0)
    rng = np.random.default_rng(0)
    apertures = []
    for _ in range(2):
        buffer = collect_rollout(vec, team, 150, rng)
        apertures.append(buffer.raw_actor_obs[..., OBS_LAYOUT["aperture"]].reshape(-1))
        ppo_update(team, buffer, rng)
    apertures = np.concatenate(apertures)
    assert apertures.size == 2 * 150 * 2
    assert np.mean(apertures > WorldConfig().rod_thickness) > 0.95
