"""Energy-detection spectrum sensing.

Sample generation under the idle/busy hypotheses, the energy test
statistic, threshold decisions and the CLT closed forms for the detection
and false-alarm probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .channel import rayleigh_gains

SIGNALS = ("bpsk", "gaussian")


def samples_per_channel(sample_rate: float, window: float, n_sensed: int) -> int:
    """``floor(rate * window / n_sensed)``, robust to float noise like 99.99999999."""
    return int(math.floor(sample_rate * window / n_sensed + 1e-9))


def realizations_per_window(window: float, coherence_time: float, n_sensed: int) -> int:
    """Number of coherence blocks spanned by one channel's share of the window."""
    if window <= 0 or coherence_time <= 0 or n_sensed <= 0:
        raise ValueError("window, coherence_time and n_sensed must be positive")
    return max(1, int(math.ceil((window / n_sensed) / coherence_time - 1e-9)))


@dataclass
class SensingConfig:
    """Timing of the sensing phase inside one time block."""

    sample_rate: float
    window: float
    n_sensed: int
    block: float = 1.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not 0 < self.window < self.block:
            raise ValueError(
                f"sensing window must satisfy 0 < window < block, "
                f"got window={self.window}, block={self.block}"
            )
        if self.n_sensed < 1:
            raise ValueError(f"n_sensed must be >= 1, got {self.n_sensed}")
        if self.n_samples < 1:
            raise ValueError("sample_rate * window / n_sensed must give at least one sample")

    @property
    def n_samples(self) -> int:
        return samples_per_channel(self.sample_rate, self.window, self.n_sensed)

    def realizations(self, coherence_time: float) -> int:
        return realizations_per_window(self.window, coherence_time, self.n_sensed)


def block_lengths(n_samples: int, n_blocks: int) -> np.ndarray:
    """Split ``n_samples`` into contiguous equal blocks; the last takes the remainder."""
    n_blocks = max(1, min(n_blocks, n_samples))
    base = n_samples // n_blocks
    lengths = np.full(n_blocks, base, dtype=int)
    lengths[-1] = n_samples - base * (n_blocks - 1)
    return lengths


def _pu_symbols(rng, size, power, signal):
    if signal == "bpsk":
        return np.where(rng.random(size) < 0.5, -1.0, 1.0) * np.sqrt(power) + 0j
    if signal == "gaussian":
        return rayleigh_gains(rng, size, power)
    raise ValueError(f"unknown PU signal {signal!r}; expected one of {SIGNALS}")


def collect_samples(
    occupied,
    noise_var: float,
    snr,
    n_samples: int,
    rng: np.random.Generator,
    *,
    n_blocks: int = 1,
    mean_power: float = 1.0,
    fading: bool = True,
    signal: str = "bpsk",
    size=(),
) -> np.ndarray:
    """Received complex samples for one sensing window.

    Returns an array of shape ``(*size, n_samples)``. Under the busy
    hypothesis the PU symbols (power ``noise_var * snr``) pass through a
    Rayleigh gain that is constant within each of ``n_blocks`` contiguous
    coherence blocks; ``fading=False`` gives the plain AWGN model.
    ``occupied`` and ``snr`` may be arrays broadcastable to ``size``, one
    entry per independent window.
    """
    size = (int(size),) if np.isscalar(size) else tuple(size)
    shape = size + (n_samples,)
    z = rayleigh_gains(rng, shape, noise_var)
    occupied = np.asarray(occupied, dtype=bool)
    if not occupied.any():
        return z
    power = noise_var * np.asarray(snr, dtype=float)[..., None]
    xi = _pu_symbols(rng, shape, power, signal)
    if fading:
        lengths = block_lengths(n_samples, n_blocks)
        h = rayleigh_gains(rng, size + (lengths.size,), mean_power)
        xi = xi * np.repeat(h, lengths, axis=-1)
    if occupied.ndim:
        xi = xi * occupied[..., None]
    return z + xi


def sample_awgn_statistic(
    occupied: bool,
    noise_var: float,
    snr: float,
    n_samples: int,
    rng: np.random.Generator,
    size=None,
    signal: str = "bpsk",
) -> np.ndarray:
    """Draw the test statistic directly from its exact non-fading distribution.

    ``2 S T / sigma^2`` is chi-square with ``2S`` degrees of freedom when idle;
    for a BPSK PU it is non-central with ``lambda = 2 S snr``, and for a
    Gaussian PU it is a central chi-square scaled by ``1 + snr``.
    """
    dof = 2 * n_samples
    scale = noise_var / dof
    if not occupied:
        return scale * rng.chisquare(dof, size)
    if signal == "bpsk":
        if snr == 0:
            return scale * rng.chisquare(dof, size)
        return scale * rng.noncentral_chisquare(dof, dof * snr, size)
    if signal == "gaussian":
        return scale * (1.0 + snr) * rng.chisquare(dof, size)
    raise ValueError(f"unknown PU signal {signal!r}; expected one of {SIGNALS}")


def test_statistic(samples) -> np.ndarray | float:
    """Average received energy over the last axis."""
    samples = np.asarray(samples)
    if samples.ndim == 0 or samples.shape[-1] == 0:
        raise ValueError("test statistic needs at least one sample")
    stat = np.mean(samples.real ** 2 + samples.imag ** 2, axis=-1)
    return float(stat) if np.ndim(stat) == 0 else stat


test_statistic.__test__ = False  # keep pytest from collecting the import


def detect(stat, threshold):
    """Busy belief: 0 when ``stat <= threshold``, else 1."""
    out = (np.asarray(stat) > np.asarray(threshold)).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def q_tail(y):
    """Standard normal tail probability Q(y)."""
    return ndtr(-np.asarray(y, dtype=float))


def p_false_alarm(threshold, noise_var, n_samples):
    return q_tail((np.asarray(threshold) / noise_var - 1.0) * np.sqrt(n_samples))


def p_detect(threshold, noise_var, snr, n_samples):
    snr = np.asarray(snr, dtype=float)
    return q_tail(
        (np.asarray(threshold) / noise_var - snr - 1.0) * np.sqrt(n_samples / (2.0 * snr + 1.0))
    )


def default_threshold(noise_var, snr):
    """Midpoint of the admissible range ``[sigma^2, sigma^2 (1 + snr)]``."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    out = noise_var * (1.0 + snr / 2.0)
    return float(out) if out.ndim == 0 else out


def threshold_in_bounds(threshold, noise_var, snr) -> bool:
    threshold = np.asarray(threshold)
    return bool(np.all((threshold >= noise_var) & (threshold <= noise_var * (1.0 + np.asarray(snr)))))


def meets_detection_floor(threshold, noise_var, snr, n_samples, floor: float) -> bool:
    """Report whether the detection probability reaches ``floor`` (never enforced)."""
    if not 0.5 <= floor < 1.0:
        raise ValueError(f"detection floor must lie in [0.5, 1), got {floor}")
    return bool(np.all(p_detect(threshold, noise_var, snr, n_samples) >= floor))
