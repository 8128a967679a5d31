"""Monte Carlo sensing study: empirical detection rate under block fading vs the AWGN closed form."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sensing import (
    collect_samples,
    default_threshold,
    detect,
    p_detect,
    p_false_alarm,
    realizations_per_window,
    samples_per_channel,
    test_statistic,
)

COLUMNS = [
    "tau", "t_c", "snr", "n_samples", "realizations",
    "empirical_pde", "analytic_pde", "empirical_pfa", "analytic_pfa",
]
UNITS = {"tau": "s", "t_c": "s"}


@dataclass
class StudyPoint:
    tau: float
    t_c: float
    snr: float
    n_samples: int
    realizations: int
    empirical_pde: float
    analytic_pde: float
    empirical_pfa: float
    analytic_pfa: float


def detection_rate(occupied, noise_var, snr, n_samples, n_blocks, threshold, trials, rng, *,
                   fading=True, mean_power=1.0, signal="bpsk", chunk=2000) -> float:
    """Fraction of ``trials`` independent windows in which the detector says busy."""
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        z = collect_samples(occupied, noise_var, snr, n_samples, rng, n_blocks=n_blocks,
                            mean_power=mean_power, fading=fading, signal=signal, size=(m,))
        hits += int(np.sum(detect(test_statistic(z), threshold)))
        done += m
    return hits / trials


def run_sensing_study(tau_grid, tc_grid, *, sample_rate, n_sensed, noise_var, snr_grid,
                      trials=1000, threshold=None, mean_power=1.0, signal="bpsk",
                      rng: np.random.Generator | None = None) -> list[StudyPoint]:
    """One row per ``(tau, t_c, snr)``; ``threshold=None`` uses the midpoint rule per snr."""
    tau_grid, tc_grid, snr_grid = list(tau_grid), list(tc_grid), list(snr_grid)
    if not tau_grid or not tc_grid or not snr_grid:
        raise ValueError("tau, t_c and snr grids must be non-empty")
    rng = rng if rng is not None else np.random.default_rng(0)
    rows = []
    for snr in snr_grid:
        psi = default_threshold(noise_var, snr) if threshold is None else threshold
        for tau in tau_grid:
            S = samples_per_channel(sample_rate, tau, n_sensed)
            if S < 1:
                raise ValueError(f"tau={tau} yields no samples per channel")
            for t_c in tc_grid:
                C = realizations_per_window(tau, t_c, n_sensed)
                pde = detection_rate(True, noise_var, snr, S, C, psi, trials, rng,
                                     mean_power=mean_power, signal=signal)
                pfa = detection_rate(False, noise_var, snr, S, C, psi, trials, rng)
                rows.append(StudyPoint(
                    tau, t_c, float(snr), S, C, pde,
                    float(p_detect(psi, noise_var, snr, S)), pfa,
                    float(p_false_alarm(psi, noise_var, S)),
                ))
    return rows


def write_study(rows: list[StudyPoint], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{c} [{UNITS[c]}]" if c in UNITS else c for c in COLUMNS])
        for r in rows:
            w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c) for c in COLUMNS])
    return path
