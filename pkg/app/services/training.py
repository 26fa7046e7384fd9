"""Training loop, deterministic evaluation, force statistics and episode replay."""
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.core.errors import ConfigurationError, TrainingAbortedError
from app.models.observation import OBS_DIM, Outcome
from app.schemas.results import EpisodeOutcome, EvalReport, ForceStatsRow, MetricsRow
from app.schemas.run import RunConfig
from app.schemas.task import EnvConfig, variation_label
from app.schemas.train import BaselineVariant
from app.services.env import CoopGraspEnv
from app.services.mappo import AgentTeam, VecEnv, build_actor_input, collect_rollout, ppo_update
from app.services.seeding import ACTION_SAMPLING, EPISODE, MINIBATCH, derive_seed, make_rng
from app.services.variations import apply_variation, parse_variation
from app.storage.checkpoint import Checkpoint, save_checkpoint
from app.storage.config_io import dump_run_config
from app.storage.tables import METRICS_SCHEMA, TableWriter
from app.storage.traces import TraceWriter

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.cgck"
RESOLVED_CONFIG = "resolved_config.toml"


@dataclass
class TrainResult:
    seed: int
    metrics: list[MetricsRow]
    final_checkpoint: Path


def seed_dir(root: Path, seed: int) -> Path:
    return root / f"seed_{seed}"


def checkpoint_name(iteration: int) -> str:
    return f"iter_{iteration:06d}.cgck"


def _metrics_row(iteration: int, env_steps: int, buffer, stats) -> MetricsRow:
    returns = buffer.episode_returns
    outcomes = buffer.episode_outcomes
    mean_return = float(np.mean(returns)) if returns else math.nan
    success = sum(o is Outcome.SUCCESS for o in outcomes) / len(outcomes) if outcomes else 0.0
    terms = dict(zip(("r_reach", "r_grasp", "r_grasp_team", "r_lift", "r_pos", "r_ori"), map(float, buffer.term_means)))
    return MetricsRow(
        iteration=iteration,
        env_steps=env_steps,
        mean_episode_reward=mean_return,
        success_rate=success,
        episodes=len(outcomes),
        **terms,
        actor_loss=stats.actor_loss,
        critic_loss=stats.critic_loss,
        entropy=stats.entropy,
        approx_kl=stats.approx_kl,
        clip_fraction=stats.clip_fraction,
    )


def train(run_config: RunConfig, seed: int, out_dir: Path | str) -> TrainResult:
    """Alternate rollout collection and PPO updates until the env-step budget is spent."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_run_config(run_config, out_dir / RESOLVED_CONFIG)
    cfg = run_config.train
    env_config = run_config.env_config()

    team = AgentTeam.create(run_config.variant, cfg, seed)
    vec = VecEnv([CoopGraspEnv(env_config) for _ in range(cfg.num_envs)], seed)
    action_rng = make_rng(seed, ACTION_SAMPLING)
    minibatch_rng = make_rng(seed, MINIBATCH)

    rows: list[MetricsRow] = []
    last_checkpoint: Path | None = None
    logger.info(
        "training %s seed=%d: %d iterations of %d env steps", run_config.variant.value, seed, cfg.iterations, cfg.batch_size
    )
    with TableWriter(out_dir / METRICS_FILE, METRICS_SCHEMA, MetricsRow) as metrics:
        for iteration in range(1, cfg.iterations + 1):
            buffer = collect_rollout(vec, team, cfg.rollout_length, action_rng)
            try:
                stats = ppo_update(team, buffer, minibatch_rng)
            except TrainingAbortedError as exc:
                last = str(last_checkpoint) if last_checkpoint else None
                logger.error("seed %d aborted at iteration %d: %s (last checkpoint: %s)", seed, iteration, exc, last)
                raise TrainingAbortedError(f"iteration {iteration}: {exc}", last_checkpoint=last) from exc
            team.actor_norm.update(buffer.raw_actor_obs.reshape(-1, OBS_DIM))
            team.critic_norm.update(buffer.raw_critic_obs.reshape(-1, team.critic_norm.dim))

            row = _metrics_row(iteration, iteration * cfg.batch_size, buffer, stats)
            rows.append(row)
            metrics.write(row)
            logger.info(
                "seed=%d iter=%d steps=%d reward=%.3f success=%.2f kl=%.4f",
                seed, iteration, row.env_steps, row.mean_episode_reward, row.success_rate, row.approx_kl,
            )
            logger.debug("grad norms: actor %.4f critic %.4f", stats.actor_grad_norm, stats.critic_grad_norm)
            if iteration % cfg.checkpoint_interval == 0:
                last_checkpoint = save_checkpoint(
                    out_dir / CHECKPOINT_DIR / checkpoint_name(iteration), team, run_config, iteration
                )

    final = save_checkpoint(out_dir / FINAL_CHECKPOINT, team, run_config, cfg.iterations)
    return TrainResult(seed=seed, metrics=rows, final_checkpoint=final)


# ---------- evaluation ----------

def _eval_env_config(checkpoint: Checkpoint, variations) -> EnvConfig:
    return apply_variation(checkpoint.run_config.env_config(), variations)


def _check_variant(checkpoint: Checkpoint, variant: BaselineVariant | None) -> None:
    if variant is not None and checkpoint.variant is not variant:
        raise ConfigurationError(
            f"checkpoint was trained as {checkpoint.variant.value}, requested variant is {variant.value}"
        )


def run_episode(env: CoopGraspEnv, team: AgentTeam, seed: int, trace: TraceWriter | None = None) -> EpisodeOutcome:
    """One deterministic (policy mean) episode."""
    observations, _ = env.reset(seed)
    total = 0.0
    steps = 0
    while True:
        inputs = np.stack([build_actor_input(o, team.variant) for o in observations])
        actions, _ = team.act(inputs, None, deterministic=True)
        result = env.step(actions)
        steps += 1
        total += float(np.mean([r.total for r in result.rewards]))
        if trace is not None:
            trace.write(env.trace_record(result.rewards))
        if result.done:
            return EpisodeOutcome(
                outcome=result.outcome.value,
                final_distance=result.info["distance"],
                length=result.info["t"],
                control_steps=steps,
                total_reward=total,
            )
        observations = result.observations


def summarize(episodes: list[EpisodeOutcome]) -> EvalReport:
    if not episodes:
        return EvalReport(success_rate=0.0, position_error_mean=0.0, position_error_variance=0.0, episodes=[])
    errors = np.array([e.final_distance for e in episodes])
    successes = sum(e.outcome == Outcome.SUCCESS.value for e in episodes)
    return EvalReport(
        success_rate=successes / len(episodes),
        position_error_mean=float(errors.mean()),
        position_error_variance=float(errors.var(ddof=1)) if len(errors) > 1 else 0.0,
        episodes=episodes,
    )


def evaluate(
    checkpoint: Checkpoint,
    variations=None,
    n_episodes: int = 100,
    seed: int = 0,
    variant: BaselineVariant | None = None,
) -> EvalReport:
    """Deterministic evaluation: same checkpoint, variations and seed give the same report."""
    _check_variant(checkpoint, variant)
    team = checkpoint.team
    team.freeze()
    env = CoopGraspEnv(_eval_env_config(checkpoint, variations))
    episodes = [run_episode(env, team, derive_seed(seed, EPISODE, k)) for k in range(n_episodes)]
    report = summarize(episodes)
    logger.info(
        "eval %s [%s]: success %.2f, position error %.4f m over %d episodes",
        team.variant.value, describe_variations(variations), report.success_rate, report.position_error_mean, n_episodes,
    )
    return report


def describe_variations(variations) -> str:
    if variations is None:
        return "nominal"
    if not isinstance(variations, (list, tuple)):
        variations = [variations]
    return variation_label([parse_variation(v) for v in variations])


def force_stats(
    checkpoint: Checkpoint,
    variations=None,
    n_episodes: int = 10,
    seed: int = 0,
) -> list[ForceStatsRow]:
    """Mean and variance of the force channels the actor observes, per channel and pooled."""
    team = checkpoint.team
    team.freeze()
    env = CoopGraspEnv(_eval_env_config(checkpoint, variations))
    samples: list[np.ndarray] = []
    for k in range(n_episodes):
        observations, _ = env.reset(derive_seed(seed, EPISODE, k))
        done = False
        while not done:
            samples.extend(o.force for o in observations)
            inputs = np.stack([build_actor_input(o, team.variant) for o in observations])
            actions, _ = team.act(inputs, None, deterministic=True)
            result = env.step(actions)
            observations, done = result.observations, result.done
        samples.extend(o.force for o in observations)

    data = np.array(samples) if samples else np.zeros((0, 4))
    label = describe_variations(variations)
    variant = team.variant.value

    def row(channel: str, values: np.ndarray) -> ForceStatsRow:
        n = values.size
        return ForceStatsRow(
            variant=variant,
            variation=label,
            channel=channel,
            mean=float(values.mean()) if n else 0.0,
            variance=float(values.var()) if n else 0.0,
            samples=n,
        )

    rows = [row(str(c), data[:, c]) for c in range(data.shape[1])]
    rows.append(row("all", data.reshape(-1)))
    return rows


def replay(checkpoint: Checkpoint, seed: int, out_path: Path | str, variations=None) -> EpisodeOutcome:
    """Run one deterministic episode and write its line-delimited JSON trace."""
    team = checkpoint.team
    team.freeze()
    env = CoopGraspEnv(_eval_env_config(checkpoint, variations))
    episode_seed = derive_seed(seed, EPISODE, 0)
    env.reset(episode_seed)
    header = {
        "variant": team.variant.value,
        "seed": seed,
        "variation": describe_variations(variations),
        "target": env.target.tolist(),
    }
    with TraceWriter(out_path, header) as trace:
        outcome = run_episode(env, team, episode_seed, trace)
    logger.info(
        "replay written to %s: %s after %d control steps (%d physics steps)",
        out_path, outcome.outcome, outcome.control_steps, outcome.length,
    )
    return outcome
