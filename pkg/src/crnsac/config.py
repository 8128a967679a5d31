"""Experiment configuration loaded from YAML.

A config file is a mapping with three optional sections, ``env``, ``train``
and ``run``. Every key is checked; unknown keys and constraint violations
raise :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelParams, PuOccupancy
from .env import EnvConfig, assign_sensed_channels
from .mhsac import TrainConfig
from .sensing import SIGNALS, SensingConfig, default_threshold, threshold_in_bounds


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class EnvSection:
    n_channels: int = 12
    n_sus: int = 6
    n_sensed: int | None = None  # None -> ceil(K / N) + 1, capped at K
    sample_rate: float = 1e4
    coherence_time: float = 2e-3
    window: float | None = None  # None -> n_sensed * 1e-2
    block: float = 1.0
    noise_var: float = 5e-3
    p_max: float = 5e-3
    pu_power: float = 1.0
    pu_snr: float | list | None = None  # None -> pu_power * gain_pu / noise_var
    bandwidth: float | None = None  # None -> n_channels (unit bandwidth per channel)
    lambda_occ: float = 10.0
    lambda_rate: float = 2.5
    target_rate: float | None = None  # None -> 0.1 * log2(1 + p_max / (2 noise_var))
    target_rate_factor: float = 0.1
    p_io_range: tuple[float, float] = (0.2, 0.5)
    p_oo_range: tuple[float, float] = (0.6, 0.9)
    p_io: list | None = None  # explicit chain, overrides the draw
    p_oo: list | None = None
    thresholds: float | list | None = None  # None -> midpoint rule
    gain_pu: float = 1.0
    gain_self: float = 1.0
    gain_cross: float = 1.0
    episode_length: int = 3000
    pu_signal: str = "bpsk"


@dataclass
class RunSection:
    seed: int = 0
    output_dir: str = "runs/default"
    checkpoint_every: int = 0  # 0 -> only the final checkpoint


@dataclass
class ExperimentConfig:
    env: EnvSection = field(default_factory=EnvSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    run: RunSection = field(default_factory=RunSection)

    # -- derived quantities ----------------------------------------------------
    @property
    def n_sensed(self) -> int:
        e = self.env
        if e.n_sensed is not None:
            return e.n_sensed
        return min(e.n_channels, math.ceil(e.n_channels / e.n_sus) + 1)

    @property
    def window(self) -> float:
        return self.env.window if self.env.window is not None else self.n_sensed * 1e-2

    @property
    def target_rate(self) -> float:
        e = self.env
        if e.target_rate is not None:
            return e.target_rate
        return e.target_rate_factor * math.log2(1.0 + e.p_max / (2.0 * e.noise_var))

    @property
    def pu_snr(self) -> np.ndarray:
        e = self.env
        shape = (e.n_sus, e.n_channels)
        if e.pu_snr is None:
            return np.full(shape, e.pu_power * e.gain_pu / e.noise_var)
        return np.broadcast_to(np.asarray(e.pu_snr, dtype=float), shape).copy()

    def occupancy(self, rng: np.random.Generator) -> PuOccupancy:
        """The PU chains: explicit if given, else drawn once from the configured ranges."""
        e = self.env
        if e.p_io is not None and e.p_oo is not None:
            return PuOccupancy(np.asarray(e.p_io, float), np.asarray(e.p_oo, float))
        return PuOccupancy.draw(e.n_channels, rng, e.p_io_range, e.p_oo_range)

    def build_env_config(self, rng: np.random.Generator | None = None) -> EnvConfig:
        e = self.env
        rng = rng if rng is not None else np.random.default_rng(self.run.seed)
        chain = self.occupancy(rng)
        snr = self.pu_snr
        if e.thresholds is None:
            thresholds = default_threshold(e.noise_var, snr)
        else:
            thresholds = np.broadcast_to(np.asarray(e.thresholds, dtype=float), snr.shape).copy()
        channel = ChannelParams(
            bandwidth=e.bandwidth if e.bandwidth is not None else float(e.n_channels),
            n_channels=e.n_channels,
            noise_var=e.noise_var,
            pu_power=e.pu_power,
            pu_snr=snr,
        )
        sensing = SensingConfig(e.sample_rate, self.window, self.n_sensed, e.block)
        return EnvConfig(
            channel=channel,
            sensing=sensing,
            p_max=e.p_max,
            target_rate=self.target_rate,
            lambda_occ=e.lambda_occ,
            lambda_rate=e.lambda_rate,
            coherence_time=e.coherence_time,
            p_io=chain.p_io,
            p_oo=chain.p_oo,
            assignment=assign_sensed_channels(e.n_channels, e.n_sus, self.n_sensed),
            thresholds=thresholds,
            gain_pu=e.gain_pu,
            gain_self=e.gain_self,
            gain_cross=e.gain_cross,
            episode_length=e.episode_length,
            pu_signal=e.pu_signal,
        )

    def to_dict(self) -> dict:
        return {"env": asdict(self.env), "train": asdict(self.train), "run": asdict(self.run)}


TEXT_FIELDS = {"pu_signal", "output_dir"}


def _number(value):
    # YAML 1.1 reads exponents without a sign (1.0e4) as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_number(v) for v in value]
    return value


def _section(cls, raw, name):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(name, "must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown key")
    raw = {k: v if k in TEXT_FIELDS else _number(v) for k, v in raw.items()}
    for k, v in raw.items():
        if k not in TEXT_FIELDS and isinstance(v, str):
            raise ConfigError(f"{name}.{k}", f"expected a number, got {v!r}")
    try:
        return cls(**raw)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from exc


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    e = cfg.env

    def need(ok, name, msg):
        if not ok:
            raise ConfigError(f"env.{name}", msg)

    need(isinstance(e.n_channels, int) and e.n_channels >= 1, "n_channels", "must be an integer >= 1")
    need(isinstance(e.n_sus, int) and e.n_sus >= 1, "n_sus", "must be an integer >= 1")
    if e.n_sensed is not None:
        need(isinstance(e.n_sensed, int) and e.n_sensed >= 1, "n_sensed", "must be an integer >= 1")
    need(cfg.n_sensed <= e.n_channels, "n_sensed", f"must not exceed n_channels={e.n_channels}")
    need(e.sample_rate > 0, "sample_rate", "must be > 0")
    need(e.coherence_time > 0, "coherence_time", "must be > 0")
    need(e.block > 0, "block", "must be > 0")
    need(0 < cfg.window < e.block, "window", f"sensing window must satisfy 0 < window < block ({e.block})")
    need(
        math.floor(e.sample_rate * cfg.window / cfg.n_sensed + 1e-9) >= 1,
        "window",
        "sample_rate * window / n_sensed must give at least one sample per channel",
    )
    need(e.noise_var > 0, "noise_var", "must be > 0")
    need(e.p_max > 0, "p_max", "must be > 0")
    need(e.pu_power >= 0, "pu_power", "must be >= 0")
    need(e.lambda_occ > 0, "lambda_occ", "must be > 0")
    need(e.lambda_rate > 0, "lambda_rate", "must be > 0")
    need(cfg.target_rate > 0, "target_rate", "must be > 0")
    for name in ("gain_pu", "gain_self", "gain_cross"):
        need(getattr(e, name) >= 0, name, "must be >= 0")
    need(isinstance(e.episode_length, int) and e.episode_length >= 1, "episode_length", "must be an integer >= 1")
    need(e.pu_signal in SIGNALS, "pu_signal", f"must be one of {SIGNALS}")
    for name in ("p_io_range", "p_oo_range"):
        lo, hi = getattr(e, name)
        need(0 <= lo <= hi <= 1, name, "must be [low, high] with 0 <= low <= high <= 1")
    need((e.p_io is None) == (e.p_oo is None), "p_io", "p_io and p_oo must be given together")
    if e.p_io is not None:
        p_io, p_oo = np.atleast_1d(np.asarray(e.p_io, float)), np.atleast_1d(np.asarray(e.p_oo, float))
        need(p_io.shape == p_oo.shape == (e.n_channels,), "p_io", f"p_io and p_oo need {e.n_channels} entries")
        need(bool(np.all((p_io >= 0) & (p_io <= 1) & (p_oo >= 0) & (p_oo <= 1))), "p_io", "probabilities must lie in [0, 1]")
    try:
        snr = cfg.pu_snr
    except ValueError as exc:
        raise ConfigError("env.pu_snr", f"cannot broadcast to (n_sus, n_channels): {exc}") from exc
    need(bool(np.all(snr >= 0)), "pu_snr", "must be >= 0 everywhere")
    if e.thresholds is not None:
        try:
            thr = np.broadcast_to(np.asarray(e.thresholds, dtype=float), snr.shape)
        except ValueError as exc:
            raise ConfigError("env.thresholds", f"cannot broadcast to (n_sus, n_channels): {exc}") from exc
        need(
            threshold_in_bounds(thr, e.noise_var, snr),
            "thresholds",
            "each threshold must lie in [noise_var, noise_var * (1 + pu_snr)]",
        )
    r = cfg.run
    if not isinstance(r.seed, int) or r.seed < 0:
        raise ConfigError("run.seed", "must be a non-negative integer")
    if not isinstance(r.checkpoint_every, int) or r.checkpoint_every < 0:
        raise ConfigError("run.checkpoint_every", "must be a non-negative integer")
    return cfg


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = sorted(set(raw) - {"env", "train", "run"})
    if unknown:
        raise ConfigError(unknown[0], "unknown section")
    env_raw = dict(raw.get("env") or {})
    for key in ("p_io_range", "p_oo_range"):
        if key in env_raw:
            env_raw[key] = tuple(env_raw[key])
    cfg = ExperimentConfig(
        env=_section(EnvSection, env_raw, "env"),
        train=_section(TrainConfig, raw.get("train"), "train"),
        run=_section(RunSection, raw.get("run"), "run"),
    )
    return validate(cfg)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    return config_from_dict(raw)
