import math
from pathlib import Path

import numpy as np
import pytest

from crnsac.config import ConfigError, config_from_dict, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_table_defaults_file():
    cfg = load_config(CONFIGS / "table_defaults.yaml")
    assert cfg.target_rate == pytest.approx(0.1 * math.log2(1.5))
    assert cfg.target_rate == pytest.approx(0.0585, abs=1e-4)
    assert cfg.n_sensed == 3 and cfg.window == pytest.approx(0.03)
    env_cfg = cfg.build_env_config()
    assert env_cfg.sensing.n_samples == 100 and env_cfg.sensing.realizations(env_cfg.coherence_time) == 5
    assert np.all((env_cfg.p_io >= 0.2) & (env_cfg.p_io <= 0.5))
    assert np.all((env_cfg.p_oo >= 0.6) & (env_cfg.p_oo <= 0.9))
    assert cfg.train.hidden == (256, 128, 64) and cfg.train.gamma == 0.4


def test_auto_sensed_count():
    assert config_from_dict({"env": {"n_channels": 12, "n_sus": 6}}).n_sensed == 3
    assert config_from_dict({"env": {"n_channels": 4, "n_sus": 2}}).n_sensed == 3
    assert config_from_dict({"env": {"n_channels": 2, "n_sus": 1}}).n_sensed == 2


@pytest.mark.parametrize(
    "raw,field",
    [
        ({"env": {"window": 1.0}}, "env.window"),
        ({"env": {"window": 2.0, "block": 1.0}}, "env.window"),
        ({"env": {"n_sensed": 13}}, "env.n_sensed"),
        ({"env": {"noise_var": 0}}, "env.noise_var"),
        ({"env": {"p_max": -1}}, "env.p_max"),
        ({"env": {"lambda_occ": 0}}, "env.lambda_occ"),
        ({"env": {"target_rate": -0.1}}, "env.target_rate"),
        ({"env": {"thresholds": 2.0}}, "env.thresholds"),
        ({"env": {"thresholds": 1e-3}}, "env.thresholds"),
        ({"env": {"pu_snr": -2.0}}, "env.pu_snr"),
        ({"env": {"pu_signal": "qam"}}, "env.pu_signal"),
        ({"env": {"p_io_range": [0.6, 0.2]}}, "env.p_io_range"),
        ({"env": {"p_io": [0.1] * 12}}, "env.p_io"),
        ({"env": {"sample_rate": 10.0}}, "env.window"),
        ({"env": {"bogus": 1}}, "env.bogus"),
        ({"train": {"gamma": 1.5}}, "train"),
        ({"train": {"nope": 1}}, "train.nope"),
        ({"run": {"seed": -1}}, "run.seed"),
        ({"env": {"noise_var": "loud"}}, "env.noise_var"),
        ({"extra": {}}, "extra"),
    ],
)
def test_violations_are_named(raw, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    assert info.value.field == field


def test_window_error_cites_block_constraint():
    with pytest.raises(ConfigError, match="0 < window < block"):
        config_from_dict({"env": {"window": 1.5}})


def test_explicit_values_kept(tmp_path):
    (tmp_path / "c.yaml").write_text(
        "env:\n  n_channels: 3\n  n_sus: 2\n  n_sensed: 2\n  target_rate: 0.2\n"
        "  p_io: [0.3, 0.3, 0.3]\n  p_oo: [0.7, 0.7, 0.7]\n  pu_snr: 50\n  thresholds: 0.05\nrun:\n  seed: 4\n"
    )
    cfg = load_config(tmp_path / "c.yaml")
    env_cfg = cfg.build_env_config()
    assert env_cfg.target_rate == 0.2 and cfg.run.seed == 4
    assert np.all(env_cfg.p_io == 0.3) and np.all(env_cfg.thresholds == 0.05)
    assert np.all(env_cfg.channel.pu_snr == 50)


def test_bad_yaml(tmp_path):
    (tmp_path / "c.yaml").write_text("env: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.yaml")
