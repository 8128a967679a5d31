"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run under pytest (lines are printed in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from crnsac.cli import main as cli_main
from crnsac.config import config_from_dict
from crnsac.env import CRNEnv, channel_metrics, empirical_rate, reward
from crnsac.experiment import build, frozen_snapshots, oracle_gap
from crnsac.mhsac import MHSAC, Batch, TrainConfig, joint_entropy, mixer_forward, train_loop
from crnsac.nn import grad_check
from crnsac.sensing import (
    p_detect,
    p_false_alarm,
    realizations_per_window,
    sample_awgn_statistic,
    samples_per_channel,
)
from crnsac.study import detection_rate

RESULTS: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    RESULTS[number] = (bool(passed), detail)
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    print(line)
    assert passed, line


# -- shared training runs --------------------------------------------------------------

TOY_K4N2 = {"env": {"n_channels": 4, "n_sus": 2, "n_sensed": 2}, "train": {"total_timesteps": 20_000}}
TOY_K3N2 = {"env": {"n_channels": 3, "n_sus": 2}, "train": {"total_timesteps": 20_000}}


@functools.cache
def trained(config_key: str, seed: int):
    raw = {"K4N2": TOY_K4N2, "K3N2": TOY_K3N2}[config_key]
    cfg = config_from_dict({**raw, "run": {"seed": seed}})
    env, agent, streams = build(cfg)
    started = time.perf_counter()
    log = train_loop(env, agent, cfg.train, streams.train)
    return cfg, env, agent, log, time.perf_counter() - started


# -- 1 ---------------------------------------------------------------------------------


def test_criterion_01_closed_forms_vs_monte_carlo():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        S = int(round(math.exp(rng.uniform(math.log(1000), math.log(10_000)))))
        snr = rng.uniform(0.05, 3.0)
        noise = 10 ** rng.uniform(-3, 0)
        psi = noise * (1 + rng.uniform(0, 1) * snr)
        busy = sample_awgn_statistic(True, noise, snr, S, rng, 100_000)
        idle = sample_awgn_statistic(False, noise, snr, S, rng, 100_000)
        worst = max(
            worst,
            abs(np.mean(busy > psi) - p_detect(psi, noise, snr, S)),
            abs(np.mean(idle > psi) - p_false_alarm(psi, noise, S)),
        )
    elapsed = time.perf_counter() - started
    record(1, worst <= 0.01 and elapsed < 60, f"max |MC - closed form| = {worst:.4f} (<= 0.01), {elapsed:.1f}s")


# -- 2 ---------------------------------------------------------------------------------


def test_criterion_02_threshold_bounds():
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(1000):
        noise = 10 ** rng.uniform(-4, 1)
        snr = rng.uniform(0, 50)
        S = int(rng.integers(1, 20_000))
        psi = rng.uniform(noise, noise * (1 + snr))
        ok &= bool(p_detect(psi, noise, snr, S) >= 0.5) and bool(p_false_alarm(psi, noise, S) <= 0.5)
    record(2, ok, "p_detect >= 0.5 and p_false_alarm <= 0.5 on 1000 in-bound thresholds")


# -- 3 ---------------------------------------------------------------------------------


def test_criterion_03_fading_realizations():
    rng = np.random.default_rng(33)
    rate, noise, trials = 20.0, 1.0, 1000
    taus = [10.0, 15.0, 20.0, 25.0]
    started = time.perf_counter()
    trend_ok, gaps, lines = True, [], []
    for snr in (0.5, 1.0, 2.0):
        psi = noise * (1 + snr / 2)
        for tau in taus:
            S = samples_per_channel(rate, tau, 1)
            analytic = float(p_detect(psi, noise, snr, S))
            one = detection_rate(True, noise, snr, S, 1, psi, trials, rng)
            many = {}
            for C in (10, 20):
                if S // C >= 20:
                    many[C] = detection_rate(True, noise, snr, S, C, psi, trials, rng)
                    gaps.append((abs(many[C] - analytic), snr, tau, C))
            trend_ok &= one < many[10]
            lines.append(f"snr={snr} tau={tau}: C=1 {one:.3f}, " + ", ".join(f"C={c} {v:.3f}" for c, v in many.items()) + f", closed form {analytic:.3f}")
    elapsed = time.perf_counter() - started
    worst = max(gaps)
    for line in lines:
        print("   ", line)
    conv_ok = worst[0] < 0.05
    record(
        3,
        trend_ok and conv_ok and elapsed < 120,
        f"C=1 below C=10 everywhere: {trend_ok}; worst |C>=10 - closed form| = {worst[0]:.3f} "
        f"at snr={worst[1]}, tau={worst[2]}, C={worst[3]} (< 0.05); {elapsed:.1f}s",
    )


# -- 4 ---------------------------------------------------------------------------------


def test_criterion_04_realization_arithmetic():
    ok = True
    for M in (1, 2, 3, 4, 6, 12):
        tau = M * 1e-2
        S = samples_per_channel(1e4, tau, M)
        C = realizations_per_window(tau, 2e-3, M)
        ok &= S == 100 and C == 5 and S // C == 20
    record(4, ok, "tau = M*1e-2, t_c = 2e-3 -> C = 5, 100 samples/channel, 20 per realization")


# -- 5 ---------------------------------------------------------------------------------


def test_criterion_05_gradients():
    rng = np.random.default_rng(5)
    started = time.perf_counter()
    cfg = TrainConfig(hidden=(4,), mixer_embed=4, minibatch=8)
    agent = MHSAC(2, 4, 3, 5e-3, cfg, rng)
    agent.log_alpha[:] = np.log([0.3, 0.2])
    B = 8
    batch = Batch(rng.normal(size=(B, 2, 4)), rng.integers(3, size=(B, 2)),
                  5e-3 * rng.uniform(0.05, 1, (B, 2)), rng.normal(size=B), rng.normal(size=(B, 2, 4)))
    target = batch.reward + cfg.gamma * agent.target_value(batch, rng.normal(size=(B, 2)))
    _, cgrads = agent.critic_loss(batch, target)
    critic_err = max(
        grad_check(agent._critic_params(i), lambda: agent.critic_loss(batch, target)[0], cgrads[i]) for i in range(2)
    )
    noise = rng.normal(size=(B, 2))
    _, agrads, (h_d, h_c) = agent.actor_loss(batch, noise)
    actor_err = max(
        grad_check(agent.actors[n].net.params, lambda: agent.actor_loss(batch, noise)[0], agrads[n]) for n in range(2)
    )
    alpha_err = []
    for which in range(2):
        _, g = agent.temperature_loss(h_d, h_c)
        # each temperature loss on its own: mask the other
        loss = lambda: float(np.exp(agent.log_alpha[which]) * ((h_d, h_c)[which] - (agent.target_entropy_d, agent.target_entropy_c)[which]))
        analytic = np.zeros(2)
        analytic[which] = g[which]
        alpha_err.append(grad_check([agent.log_alpha], loss, [analytic]))
    elapsed = time.perf_counter() - started
    worst = max(critic_err, actor_err, *alpha_err)
    record(
        5,
        worst < 1e-4 and elapsed < 60,
        f"relative FD error critic {critic_err:.1e}, actor {actor_err:.1e}, "
        f"alpha_d {alpha_err[0]:.1e}, alpha_c {alpha_err[1]:.1e} (< 1e-4); {elapsed:.1f}s",
    )


# -- 6 ---------------------------------------------------------------------------------


def min_mixer_slope(mixer, rng, points=1000, h=1e-6):
    state_dim = mixer.hyper_w1.sizes[0]
    qs = rng.normal(scale=5, size=(points, mixer.n_agents))
    states = rng.normal(scale=2, size=(points, state_dim))
    base = mixer_forward(mixer, qs, states)
    worst = np.inf
    for n in range(mixer.n_agents):
        bumped = qs.copy()
        bumped[:, n] += h
        worst = min(worst, float(np.min((mixer_forward(mixer, bumped, states) - base) / h)))
    return worst


def test_criterion_06_mixer_monotonicity():
    rng = np.random.default_rng(6)
    _, _, agent, _, _ = trained("K4N2", 0)
    started = time.perf_counter()
    fresh = MHSAC(2, 4, 3, 5e-3, TrainConfig(), rng)
    slopes = {
        "fresh": min(min_mixer_slope(m, rng) for m in fresh.mixers + fresh.mixer_targets),
        "trained": min(min_mixer_slope(m, rng) for m in agent.mixers + agent.mixer_targets),
    }
    elapsed = time.perf_counter() - started
    ok = all(v >= -1e-9 for v in slopes.values()) and elapsed < 60
    record(6, ok, f"min dQtot/dQn fresh {slopes['fresh']:.3e}, trained {slopes['trained']:.3e} (>= -1e-9); {elapsed:.1f}s")


# -- 7 ---------------------------------------------------------------------------------


def test_criterion_07_entropy_identity():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        D = int(rng.integers(1, 10))
        probs = rng.dirichlet(np.full(D, rng.uniform(0.1, 3)))
        log_pc = rng.normal(scale=3)
        a_d, a_c = rng.uniform(0, 2, 2)
        brute = sum(p * (a_d * -math.log(p) + a_c * -log_pc) for p in probs if p > 0)
        worst = max(worst, abs(brute - joint_entropy(probs, log_pc, a_d, a_c)))
    record(7, worst <= 1e-12, f"max |brute force - collapsed| = {worst:.1e} (<= 1e-12)")


# -- 8 ---------------------------------------------------------------------------------


def test_criterion_08_reward_and_metrics():
    checks = {
        "occupied + rate ok -> R - 10": reward(1, True, 0.7, 0.0585, 10.0, 2.5) == 0.7 - 10.0,
        "idle -> 0": reward(0, False, 0.0, 0.0585, 10.0, 2.5) == 0.0,
        "idle + low rate -> -2.5": reward(0, True, 0.01, 0.0585, 10.0, 2.5) == -2.5,
        "rate: idle SU": empirical_rate(np.array([0, 0]), 2, 3.0) == 0.0,
        "rate: believed busy": empirical_rate(np.array([1, 0]), 0, 3.0) == 0.0,
        "rate: believed idle, snr 1": empirical_rate(np.array([0, 1]), 0, 1.0) == 1.0,
        "omega_i = 1": channel_metrics(np.array([[0, 1, 0, 0], [0, 0, 1, 0]]), np.array([1, 0, 0, 0]))[0] == 1.0,
        "omega_o = 1": channel_metrics(np.array([[1, 0, 0, 0], [0, 0, 0, 0]]), np.array([1, 0, 0, 0]))[1] == 1.0,
        "omega_c = 3": channel_metrics(np.array([[0, 0, 1, 0]] * 3), np.zeros(4))[2] == 3.0,
        "omega_o = 0 with no PU": channel_metrics(np.array([[1, 0]]), np.zeros(2))[1] == 0.0,
    }
    failed = [k for k, v in checks.items() if not v]
    record(8, not failed, f"{len(checks) - len(failed)}/{len(checks)} reward/rate/metric examples exact" + (f"; failed: {failed}" if failed else ""))


# -- 9 ---------------------------------------------------------------------------------


def test_criterion_09_scaled_training():
    passes, lines = 0, []
    slowest = 0.0
    for seed in range(3):
        _, _, _, log, seconds = trained("K4N2", seed)
        s = log.summary(1000)
        ok = s["omega_occupied"] < 0.05 and s["omega_idle"] > 0.85 and s["collisions"] < 0.05
        passes += ok
        slowest = max(slowest, seconds)
        lines.append(f"seed {seed}: omega_o {s['omega_occupied']:.3f}, omega_i {s['omega_idle']:.3f}, omega_c {s['collisions']:.3f}, {seconds:.0f}s")
    record(9, passes >= 2 and slowest < 900, f"{passes}/3 seeds meet targets (need 2) [" + "; ".join(lines) + "]")


# -- 10 --------------------------------------------------------------------------------


def test_criterion_10_oracle_gap():
    cfg, env, agent, _, _ = trained("K3N2", 0)
    eval_env = CRNEnv(env.cfg, np.random.default_rng(1010))
    gap = oracle_gap(eval_env, agent, frozen_snapshots(eval_env, 100))
    record(10, gap["ratio"] >= 0.8, f"policy {gap['policy']:.4f} vs oracle {gap['oracle']:.4f}: ratio {gap['ratio']:.3f} (>= 0.8) over 100 snapshots")


# -- 11 --------------------------------------------------------------------------------


def test_criterion_11_determinism(tmp_path):
    cfg_path = tmp_path / "det.yaml"
    cfg_path.write_text(
        "env:\n  n_channels: 4\n  n_sus: 2\n  n_sensed: 2\ntrain:\n  total_timesteps: 2000\nrun:\n  seed: 11\n"
    )
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli_main(["train", str(cfg_path), "--out", str(a)]) == 0
    assert cli_main(["train", str(cfg_path), "--out", str(b)]) == 0
    same = all((a / f).read_bytes() == (b / f).read_bytes() for f in ("metrics.csv", "metrics_smoothed.csv"))
    record(11, same, "two train runs with one config and seed give byte-identical metric CSVs")


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
    print(f"{sum(ok for ok, _ in RESULTS.values())}/{len(RESULTS)} criteria passed")
