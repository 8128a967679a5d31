"""Block Rayleigh fading and primary-user occupancy chains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def rayleigh_gains(rng: np.random.Generator, size, mean_power: float = 1.0) -> np.ndarray:
    """Draw circularly-symmetric complex Gaussian gains with E|h|^2 = mean_power."""
    scale = np.sqrt(np.asarray(mean_power, dtype=float) / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * scale


class FadingProcess:
    """Piecewise-constant Rayleigh gain over coherence blocks.

    The gain in block ``b`` (the interval ``[b*t_c, (b+1)*t_c)``) is a pure
    function of ``(seed, b)``: a counter-based Philox stream is keyed by the
    seed and indexed by the block, so revisiting a block or replaying a run
    always reproduces the same gain.
    """

    def __init__(self, coherence_time: float, mean_power: float = 1.0, seed: int = 0):
        if coherence_time <= 0:
            raise ValueError(f"coherence_time must be positive, got {coherence_time}")
        if mean_power < 0:
            raise ValueError(f"mean_power must be non-negative, got {mean_power}")
        self.coherence_time = float(coherence_time)
        self.mean_power = float(mean_power)
        self.seed = int(seed)
        self.block_start = 0.0
        self._block = 0
        self.gain = self.gain_for_block(0)

    def block_index(self, t: float) -> int:
        # small slack so t = b*t_c computed in floating point lands in block b
        return int(math.floor(t / self.coherence_time + 1e-9))

    def gain_for_block(self, block: int) -> complex:
        if self.mean_power == 0.0:
            return 0j
        gen = np.random.Generator(np.random.Philox(key=self.seed, counter=block))
        re, im = gen.standard_normal(2)
        return complex(re, im) * math.sqrt(self.mean_power / 2.0)

    def sample_gain(self, t: float) -> complex:
        """Gain at time ``t``; redrawn only when ``t`` enters a new block."""
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        if t < self.block_start:
            raise ValueError(f"time {t} precedes the current block start {self.block_start}")
        block = self.block_index(t)
        if block != self._block:
            self._block = block
            self.block_start = block * self.coherence_time
            self.gain = self.gain_for_block(block)
        return self.gain


@dataclass
class ChannelParams:
    """Physical-layer constants shared by every link.

    ``pu_snr`` holds the average PU SNR seen by each SU on each channel,
    shape ``(n_sus, n_channels)``.
    """

    bandwidth: float
    n_channels: int
    noise_var: float
    pu_power: float
    pu_snr: np.ndarray

    def __post_init__(self):
        self.pu_snr = np.asarray(self.pu_snr, dtype=float)
        if self.n_channels < 1:
            raise ValueError(f"n_channels must be >= 1, got {self.n_channels}")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be > 0, got {self.noise_var}")
        if self.pu_power < 0:
            raise ValueError(f"pu_power must be >= 0, got {self.pu_power}")
        if np.any(self.pu_snr < 0):
            raise ValueError("pu_snr must be >= 0 everywhere")
        if self.pu_snr.ndim != 2 or self.pu_snr.shape[1] != self.n_channels:
            raise ValueError(
                f"pu_snr must have shape (n_sus, {self.n_channels}), got {self.pu_snr.shape}"
            )


@dataclass
class PuOccupancy:
    """Independent two-state Markov chain per channel (0 = idle, 1 = busy)."""

    p_io: np.ndarray
    p_oo: np.ndarray
    state: np.ndarray = field(default=None)

    def __post_init__(self):
        self.p_io = np.atleast_1d(np.asarray(self.p_io, dtype=float))
        self.p_oo = np.atleast_1d(np.asarray(self.p_oo, dtype=float))
        if self.p_io.shape != self.p_oo.shape:
            raise ValueError("p_io and p_oo must have the same shape")
        for name, p in (("p_io", self.p_io), ("p_oo", self.p_oo)):
            if np.any((p < 0) | (p > 1)):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.state is None:
            self.state = np.zeros(self.p_io.shape, dtype=np.int8)
        else:
            self.state = np.asarray(self.state, dtype=np.int8).reshape(self.p_io.shape)

    @property
    def n_channels(self) -> int:
        return self.p_io.size

    @classmethod
    def draw(cls, n_channels, rng, io_range=(0.2, 0.5), oo_range=(0.6, 0.9)) -> "PuOccupancy":
        p_io = rng.uniform(io_range[0], io_range[1], n_channels)
        p_oo = rng.uniform(oo_range[0], oo_range[1], n_channels)
        return cls(p_io, p_oo)

    def stationary_idle_prob(self) -> np.ndarray:
        """Long-run idle probability ``(1 - p_oo) / (p_io + 1 - p_oo)`` per channel."""
        denom = self.p_io + 1.0 - self.p_oo
        if np.any(denom <= 0):
            bad = np.flatnonzero(denom <= 0).tolist()
            raise ValueError(f"chain on channel(s) {bad} has two absorbing states")
        return (1.0 - self.p_oo) / denom

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Start every channel from its stationary distribution."""
        busy = 1.0 - self.stationary_idle_prob()
        self.state = (rng.random(self.n_channels) < busy).astype(np.int8)
        return self.state

    def step(self, rng: np.random.Generator) -> np.ndarray:
        p_busy = np.where(self.state == 1, self.p_oo, self.p_io)
        self.state = (rng.random(self.n_channels) < p_busy).astype(np.int8)
        return self.state


def step_occupancy(chain: PuOccupancy, rng: np.random.Generator) -> np.ndarray:
    return chain.step(rng)


def stationary_idle_prob(chain: PuOccupancy) -> np.ndarray:
    return chain.stationary_idle_prob()
