"""Multi-SU cognitive radio environment.

One call to :meth:`CRNEnv.step` covers one time block: the SUs act on the
observations sensed at the start of the block, the environment scores the
joint action against the true occupancy and gains, then advances the PU
chains, redraws the fading and senses again.

Indices are 0-based throughout. An SU with ``M`` sensed channels has
``M + 1`` discrete arms; arm ``M`` means stay idle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, PuOccupancy, rayleigh_gains
from .sensing import SensingConfig, collect_samples, default_threshold, detect, test_statistic


def assign_sensed_channels(n_channels: int, n_sus: int, n_sensed: int) -> list[np.ndarray]:
    """Round-robin blocks of ``n_sensed`` channels, wrapping around the band."""
    if n_sensed > n_channels:
        raise ValueError(f"cannot sense {n_sensed} of only {n_channels} channels")
    if n_sensed < 1 or n_sus < 1:
        raise ValueError("n_sus and n_sensed must be at least 1")
    return [(n * n_sensed + np.arange(n_sensed)) % n_channels for n in range(n_sus)]


@dataclass
class Observation:
    beliefs: np.ndarray  # int8, 1 = PU believed present
    stats: np.ndarray  # energy test statistics, Watts

    def features(self, noise_var: float) -> np.ndarray:
        """Network input: beliefs followed by ``log(T / sigma^2)``."""
        return np.concatenate([self.beliefs.astype(float), np.log(np.maximum(self.stats / noise_var, 1e-12))])


@dataclass
class Action:
    choice: int  # sensed-channel slot, or n_sensed for idle
    power: float  # Watts


@dataclass
class StepOutcome:
    rewards: np.ndarray
    reward: float
    rates: np.ndarray  # empirical rates, bits/s/Hz
    sinr: np.ndarray  # true SINR on the chosen channel (0 when idle)
    omega_idle: float
    omega_occupied: float
    collisions: float
    observations: list[Observation]
    occupancy: np.ndarray  # occupancy that was in force during the block
    episode_end: bool = False


@dataclass
class EnvConfig:
    channel: ChannelParams
    sensing: SensingConfig
    p_max: np.ndarray
    target_rate: float
    lambda_occ: float = 10.0
    lambda_rate: float = 2.5
    coherence_time: float = 2e-3
    p_io: np.ndarray = None
    p_oo: np.ndarray = None
    assignment: list[np.ndarray] = None
    thresholds: np.ndarray = None  # (n_sus, n_channels)
    gain_pu: float = 1.0
    gain_self: float = 1.0
    gain_cross: float = 1.0
    episode_length: int = 3000
    pu_signal: str = "bpsk"

    def __post_init__(self):
        n, k, m = self.n_sus, self.n_channels, self.n_sensed
        self.p_max = np.broadcast_to(np.asarray(self.p_max, dtype=float), (n,)).copy()
        if self.assignment is None:
            self.assignment = assign_sensed_channels(k, n, m)
        self.assignment = [np.asarray(a, dtype=int) for a in self.assignment]
        if len(self.assignment) != n or any(a.shape != (m,) for a in self.assignment):
            raise ValueError(f"assignment must list {m} channels for each of {n} SUs")
        if any(np.any((a < 0) | (a >= k)) or len(set(a.tolist())) != m for a in self.assignment):
            raise ValueError("assignment entries must be distinct channel indices")
        if m > k:
            raise ValueError(f"n_sensed={m} exceeds n_channels={k}")
        if not self.target_rate > 0:
            raise ValueError(f"target_rate must be > 0, got {self.target_rate}")
        if not (self.lambda_occ > 0 and self.lambda_rate > 0):
            raise ValueError("penalty weights must be > 0")
        if np.any(self.p_max <= 0):
            raise ValueError("p_max must be > 0")
        if self.thresholds is None:
            self.thresholds = default_threshold(self.channel.noise_var, self.channel.pu_snr)
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        if self.p_io is None or self.p_oo is None:
            raise ValueError("occupancy transition probabilities are required")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")

    @property
    def n_sus(self) -> int:
        return self.channel.pu_snr.shape[0]

    @property
    def n_channels(self) -> int:
        return self.channel.n_channels

    @property
    def n_sensed(self) -> int:
        return self.sensing.n_sensed

    @property
    def n_arms(self) -> int:
        return self.n_sensed + 1

    @property
    def obs_dim(self) -> int:
        return 2 * self.n_sensed


# -- per-quantity helpers ------------------------------------------------------


def transmit_matrix(choices, assignment, n_channels) -> np.ndarray:
    """``X[n, k] = 1`` when SU ``n`` transmits on channel ``k``."""
    n_sus = len(assignment)
    X = np.zeros((n_sus, n_channels), dtype=np.int8)
    for n, c in enumerate(choices):
        if c < len(assignment[n]):
            X[n, assignment[n][c]] = 1
    return X


def true_sinr(n, k, X, powers, gain_self, gain_cross, gain_pu, noise_var, pu_power, busy) -> float:
    """SINR of SU ``n`` on channel ``k``.

    ``gain_self[n, k]``, ``gain_cross[j, n, k]`` (transmitter ``j`` to
    receiver ``n``) and ``gain_pu[n, k]`` are power gains ``|h|^2``. The PU
    term enters only when the channel is actually busy.
    """
    if not X[n, k]:
        raise ValueError(f"SU {n} does not transmit on channel {k}")
    signal = gain_self[n, k] * powers[n]
    interference = 0.0
    for j in range(X.shape[0]):
        if j != n and X[j, k]:
            interference += gain_cross[j, n, k] * powers[j]
    if busy[k]:
        interference += gain_pu[n, k] * pu_power
    return signal / (noise_var + interference)


def rate_from_sinr(sinr, bandwidth, n_channels):
    """Shannon rate on one of ``n_channels`` equal slices of ``bandwidth``, bits/s."""
    return bandwidth / n_channels * np.log2(1.0 + np.asarray(sinr, dtype=float))


def empirical_rate(beliefs, choice: int, snr_estimate: float) -> float:
    """``(1 - belief) * log2(1 + snr)`` on the chosen slot, 0 when idle."""
    if choice >= len(beliefs):
        return 0.0
    return float((1 - beliefs[choice]) * math.log2(1.0 + snr_estimate))


def analytic_average_rate(beliefs, idle_prob, p_fa, p_de, rate_idle, rate_busy, window, block):
    """Expected rate over the four sense/true-state cases, scaled by transmit time."""
    beliefs = np.asarray(beliefs, dtype=float)
    idle_prob = np.asarray(idle_prob, dtype=float)
    per_channel = idle_prob * (1.0 - np.asarray(p_fa)) * rate_idle + (1.0 - idle_prob) * (
        1.0 - np.asarray(p_de)
    ) * rate_busy
    return float((1.0 - window / block) * np.sum((1.0 - beliefs) * per_channel))


def reward(belief_at_choice: int, transmitting: bool, rate: float, target_rate, lambda_occ, lambda_rate) -> float:
    occ_penalty = lambda_occ * belief_at_choice if transmitting else 0.0
    if rate >= target_rate:
        return -occ_penalty + rate + 0.0
    return -occ_penalty - lambda_rate * float(transmitting) + 0.0


def channel_metrics(X, occupancy) -> tuple[float, float, float]:
    """Idle-channel usage, occupied-channel usage and SU-SU collision count.

    Idle usage is 1 when no channel is idle and occupied usage is 0 when
    every channel is idle: in both cases nothing could have been done better.
    """
    X = np.asarray(X)
    occupancy = np.asarray(occupancy)
    n_sus, n_channels = X.shape
    used = X.any(axis=0)
    n_busy = int(occupancy.sum())
    denom = min(n_channels - n_busy, n_sus)
    omega_i = float(np.sum(used & (occupancy == 0)) / denom) if denom > 0 else 1.0
    omega_o = float(np.sum(used & (occupancy == 1)) / n_busy) if n_busy > 0 else 0.0
    per_channel = X.sum(axis=0)
    omega_c = float(per_channel[per_channel >= 2].sum())
    return omega_i, omega_o, omega_c


# -- the environment -------------------------------------------------------------


@dataclass
class Snapshot:
    """Everything fixed at the start of a block, before the SUs act."""

    occupancy: np.ndarray
    gain_self: np.ndarray
    gain_cross: np.ndarray
    gain_pu: np.ndarray
    observations: list[Observation] = field(default_factory=list)


class CRNEnv:
    def __init__(self, cfg: EnvConfig, seed: int | np.random.Generator = 0):
        self.cfg = cfg
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.chain = PuOccupancy(cfg.p_io, cfg.p_oo)
        self.t = 0
        self.snr_sensed = np.stack([cfg.channel.pu_snr[n, a] for n, a in enumerate(cfg.assignment)])
        self.thr_sensed = np.stack([cfg.thresholds[n, a] for n, a in enumerate(cfg.assignment)])
        self.n_samples = cfg.sensing.n_samples
        self.n_blocks = cfg.sensing.realizations(cfg.coherence_time)
        self.state: Snapshot | None = None

    @property
    def observations(self) -> list[Observation]:
        return self.state.observations

    def reset(self) -> list[Observation]:
        self.chain.reset(self.rng)
        self._begin_block()
        return self.state.observations

    def _begin_block(self) -> None:
        cfg = self.cfg
        n, k = cfg.n_sus, cfg.n_channels
        occ = self.chain.state.copy()
        gain_self = np.abs(rayleigh_gains(self.rng, (n, k), cfg.gain_self)) ** 2
        gain_cross = np.abs(rayleigh_gains(self.rng, (n, n, k), cfg.gain_cross)) ** 2
        gain_pu = np.abs(rayleigh_gains(self.rng, (n, k), cfg.gain_pu)) ** 2
        self.state = Snapshot(occ, gain_self, gain_cross, gain_pu)
        self.state.observations = self.sense(occ)

    def sense(self, occupancy) -> list[Observation]:
        """Energy detection by every SU on every channel it is assigned."""
        cfg = self.cfg
        busy = np.stack([occupancy[a] for a in cfg.assignment]).astype(bool)
        samples = collect_samples(
            busy,
            cfg.channel.noise_var,
            self.snr_sensed,
            self.n_samples,
            self.rng,
            n_blocks=self.n_blocks,
            mean_power=cfg.gain_pu,
            signal=cfg.pu_signal,
            size=busy.shape,
        )
        stats = test_statistic(samples)
        beliefs = detect(stats, self.thr_sensed)
        return [Observation(beliefs[i].copy(), stats[i].copy()) for i in range(cfg.n_sus)]

    def validate(self, actions: list[Action]) -> None:
        cfg = self.cfg
        if len(actions) != cfg.n_sus:
            raise ValueError(f"expected {cfg.n_sus} actions, got {len(actions)}")
        bad = [
            n
            for n, a in enumerate(actions)
            if not (0 <= int(a.choice) <= cfg.n_sensed)
            or not (0 < a.power <= cfg.p_max[n])
            or not math.isfinite(a.power)
        ]
        if bad:
            raise ValueError(f"invalid action for SU(s) {bad}")

    def evaluate(self, choices, powers, state: Snapshot | None = None, gate: str = "belief"):
        """Score a joint action on a fixed block.

        ``gate='belief'`` uses each SU's sensed beliefs (the training reward);
        ``gate='truth'`` substitutes the true occupancy for the beliefs.
        Returns ``(rewards, rates, sinr, X)``.
        """
        cfg = self.cfg
        state = state or self.state
        X = transmit_matrix(choices, cfg.assignment, cfg.n_channels)
        n_sus = cfg.n_sus
        rewards = np.zeros(n_sus)
        rates = np.zeros(n_sus)
        sinr = np.zeros(n_sus)
        for n in range(n_sus):
            c = int(choices[n])
            transmitting = c < cfg.n_sensed
            if transmitting:
                k = cfg.assignment[n][c]
                sinr[n] = true_sinr(
                    n, k, X, powers, state.gain_self, state.gain_cross, state.gain_pu,
                    cfg.channel.noise_var, cfg.channel.pu_power, state.occupancy,
                )
            if gate == "belief":
                beliefs = state.observations[n].beliefs
            elif gate == "truth":
                beliefs = state.occupancy[cfg.assignment[n]]
            else:
                raise ValueError(f"unknown gate {gate!r}")
            rates[n] = empirical_rate(beliefs, c, sinr[n])
            belief = int(beliefs[c]) if transmitting else 0
            rewards[n] = reward(belief, transmitting, rates[n], cfg.target_rate, cfg.lambda_occ, cfg.lambda_rate)
        return rewards, rates, sinr, X

    def step(self, actions: list[Action]) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        self.validate(actions)
        choices = [int(a.choice) for a in actions]
        powers = np.array([a.power for a in actions], dtype=float)
        rewards, rates, sinr, X = self.evaluate(choices, powers)
        occ = self.state.occupancy
        omega_i, omega_o, omega_c = channel_metrics(X, occ)
        total = 0.0
        for r in rewards.tolist():
            total += r

        self.t += 1
        episode_end = self.t % self.cfg.episode_length == 0
        if episode_end:
            self.chain.reset(self.rng)
        else:
            self.chain.step(self.rng)
        self._begin_block()
        return StepOutcome(
            rewards=rewards,
            reward=total,
            rates=rates,
            sinr=sinr,
            omega_idle=omega_i,
            omega_occupied=omega_o,
            collisions=omega_c,
            observations=self.state.observations,
            occupancy=occ,
            episode_end=episode_end,
        )
