"""Exhaustive joint channel assignment at full power, for scoring trained policies."""

from __future__ import annotations

import itertools

import numpy as np

from .env import CRNEnv, Snapshot

MAX_CHANNELS = 6
MAX_SUS = 4


def score_assignment(env: CRNEnv, choices, state: Snapshot | None = None, powers=None) -> float:
    """Sum of per-SU rewards when gating on the true occupancy."""
    powers = env.cfg.p_max if powers is None else np.asarray(powers, dtype=float)
    rewards, _, _, _ = env.evaluate(list(choices), powers, state=state, gate="truth")
    total = 0.0
    for r in rewards.tolist():
        total += r
    return total


def brute_force_allocation(env: CRNEnv, state: Snapshot | None = None, order=None):
    """Return ``(best choices, best score)`` over all ``(M + 1) ** N`` joint arms.

    Every SU transmits at its maximum power. Ties keep the first assignment
    in enumeration order; ``order`` may permute that order (used to check
    that the optimum does not depend on it).
    """
    cfg = env.cfg
    if cfg.n_channels > MAX_CHANNELS or cfg.n_sus > MAX_SUS:
        raise ValueError(
            f"oracle limited to K <= {MAX_CHANNELS} and N <= {MAX_SUS}, "
            f"got K={cfg.n_channels}, N={cfg.n_sus}"
        )
    candidates = list(itertools.product(range(cfg.n_arms), repeat=cfg.n_sus))
    if order is not None:
        candidates = [candidates[i] for i in order]
    best, best_score = None, -np.inf
    for choices in candidates:
        s = score_assignment(env, choices, state)
        if s > best_score:
            best, best_score = choices, s
    return tuple(int(c) for c in best), float(best_score)
