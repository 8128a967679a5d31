"""Cognitive radio sensing/access simulator with a multi-agent hybrid soft actor-critic."""

from .channel import ChannelParams, FadingProcess, PuOccupancy
from .config import ConfigError, ExperimentConfig, load_config
from .env import Action, CRNEnv, EnvConfig, Observation, StepOutcome
from .mhsac import MHSAC, TrainConfig, train_loop
from .sensing import SensingConfig

__all__ = [
    "Action", "CRNEnv", "ChannelParams", "ConfigError", "EnvConfig", "ExperimentConfig",
    "FadingProcess", "MHSAC", "Observation", "PuOccupancy", "SensingConfig", "StepOutcome",
    "TrainConfig", "load_config", "train_loop",
]
__version__ = "0.1.0"
