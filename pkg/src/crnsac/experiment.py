"""Train, evaluate and oracle runs wired to configs and output directories."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .env import Action, CRNEnv, Snapshot
from .metrics import MetricsLog, emit_metrics
from .mhsac import MHSAC, config_hash, train_loop
from .nn import DivergenceError
from .oracle import brute_force_allocation, score_assignment

log = logging.getLogger(__name__)


@dataclass
class Streams:
    """Independent generators derived from one seed."""

    occupancy: np.random.Generator
    env: np.random.Generator
    init: np.random.Generator
    train: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "Streams":
        return cls(*(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)))


def build(cfg: ExperimentConfig, seed: int | None = None):
    """Environment and freshly initialised agent for ``cfg``."""
    seed = cfg.run.seed if seed is None else seed
    streams = Streams.from_seed(seed)
    env_cfg = cfg.build_env_config(streams.occupancy)
    env = CRNEnv(env_cfg, streams.env)
    agent = MHSAC(env_cfg.n_sus, env_cfg.obs_dim, env_cfg.n_arms, env_cfg.p_max, cfg.train, streams.init)
    return env, agent, streams


def _manifest(cfg: ExperimentConfig, env: CRNEnv, step: int, rng: np.random.Generator) -> dict:
    return {
        "config_hash": config_hash(cfg.to_dict()),
        "seed": cfg.run.seed,
        "step": step,
        "rng_state": rng.bit_generator.state,
        "p_io": env.cfg.p_io.tolist(),
        "p_oo": env.cfg.p_oo.tolist(),
    }


def run_train(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run training and write ``metrics.csv``, ``metrics_smoothed.csv``, ``summary.json`` and a checkpoint.

    On divergence the last good parameters are saved to ``checkpoint_last_good``
    and :class:`DivergenceError` is re-raised.
    """
    out = Path(out_dir if out_dir is not None else cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    env, agent, streams = build(cfg)
    metrics = MetricsLog.for_agents(env.cfg.n_sus)
    every = cfg.run.checkpoint_every

    def on_step(step, ag):
        if every and (step + 1) % every == 0:
            ag.save(out / "checkpoint", _manifest(cfg, env, step + 1, streams.train))

    started = time.perf_counter()
    try:
        train_loop(env, agent, cfg.train, streams.train, metrics, on_step)
    except DivergenceError as exc:
        agent.save(out / "checkpoint_last_good", _manifest(cfg, env, len(metrics), streams.train))
        if len(metrics):
            emit_metrics(metrics, out / "metrics.csv")
        log.error("training diverged at step %d: %s", len(metrics), exc)
        raise
    elapsed = time.perf_counter() - started
    agent.save(out / "checkpoint", _manifest(cfg, env, len(metrics), streams.train))
    summary = {
        "steps": len(metrics),
        "seconds": elapsed,
        "trailing_1000": metrics.summary(1000) if len(metrics) else {},
        "p_io": env.cfg.p_io.tolist(),
        "p_oo": env.cfg.p_oo.tolist(),
        "target_rate": env.cfg.target_rate,
        "config_hash": config_hash(cfg.to_dict()),
    }
    if len(metrics):
        emit_metrics(metrics, out / "metrics.csv")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return {"summary": summary, "metrics": metrics, "agent": agent, "env": env}


def load_agent(checkpoint, cfg: ExperimentConfig) -> MHSAC:
    agent, info = MHSAC.load(checkpoint)
    want = config_hash(cfg.to_dict())
    if info.get("config_hash") not in (None, want):
        log.warning("checkpoint was trained with config %s, evaluating with %s", info["config_hash"], want)
    return agent


def evaluate_policy(env: CRNEnv, agent: MHSAC, steps: int, rng: np.random.Generator, deterministic=True) -> MetricsLog:
    """Roll out the policy without learning; losses and temperatures are logged as-is."""
    noise_var = env.cfg.channel.noise_var
    metrics = MetricsLog.for_agents(env.cfg.n_sus)
    obs = env.reset()
    for step in range(steps):
        feats = np.stack([o.features(noise_var) for o in obs])
        actions = agent.act(feats, rng, deterministic=deterministic)
        out = env.step(actions)
        obs = out.observations
        row = dict(step=step, reward=out.reward, rate_sum=float(out.rates.sum()),
                   omega_idle=out.omega_idle, omega_occupied=out.omega_occupied,
                   collisions=out.collisions, critic_loss=math.nan, actor_loss=math.nan,
                   alpha_d=agent.alpha_d, alpha_c=agent.alpha_c)
        for n, a in enumerate(actions):
            row[f"power_{n}"] = a.power
        metrics.append(**row)
    return metrics


def run_eval(cfg: ExperimentConfig, checkpoint, steps: int, out_dir=None) -> dict:
    out = Path(out_dir if out_dir is not None else cfg.run.output_dir)
    env, _, streams = build(cfg)
    agent = load_agent(checkpoint, cfg)
    metrics = evaluate_policy(env, agent, steps, streams.train)
    emit_metrics(metrics, out / "eval.csv")
    summary = {"steps": steps, "trailing_1000": metrics.summary(1000)}
    (out / "eval_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def frozen_snapshots(env: CRNEnv, count: int) -> list[Snapshot]:
    """Successive blocks from a fresh reset, each with its occupancy, gains and observations."""
    env.reset()
    snaps = [env.state]
    while len(snaps) < count:
        idle = [env.cfg.n_sensed] * env.cfg.n_sus
        env.step([Action(c, float(p)) for c, p in zip(idle, env.cfg.p_max)])
        snaps.append(env.state)
    return snaps


def oracle_gap(env: CRNEnv, agent: MHSAC, snapshots: list[Snapshot]) -> dict:
    """Mean truth-gated score of the deterministic policy relative to the exhaustive optimum."""
    noise_var = env.cfg.channel.noise_var
    rng = np.random.default_rng(0)  # unused in deterministic mode
    policy, best = [], []
    for snap in snapshots:
        feats = np.stack([o.features(noise_var) for o in snap.observations])
        actions = agent.act(feats, rng, deterministic=True)
        powers = np.array([a.power for a in actions])
        policy.append(score_assignment(env, [a.choice for a in actions], snap, powers))
        best.append(brute_force_allocation(env, snap)[1])
    mean_policy, mean_best = float(np.mean(policy)), float(np.mean(best))
    ratio = mean_policy / mean_best if mean_best > 0 else math.nan
    return {"policy": mean_policy, "oracle": mean_best, "ratio": ratio, "snapshots": len(snapshots)}


def run_oracle(cfg: ExperimentConfig, seed: int, snapshots: int = 1, checkpoint=None, out_dir=None) -> dict:
    env, _, _ = build(cfg, seed)
    snaps = frozen_snapshots(env, snapshots)
    rows = []
    for i, snap in enumerate(snaps):
        choices, score = brute_force_allocation(env, snap)
        rows.append({"snapshot": i, "choices": list(choices), "score": score,
                     "occupancy": snap.occupancy.tolist()})
    result = {"seed": seed, "assignments": rows}
    if checkpoint is not None:
        result["gap"] = oracle_gap(env, load_agent(checkpoint, cfg), snaps)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.json").write_text(json.dumps(result, indent=2))
    return result
