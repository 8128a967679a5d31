import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnsac.metrics import MetricsLog, emit_metrics, ewma, trailing_mean


def test_ewma_constant_series():
    assert np.array_equal(ewma(np.full(30, 2.5)), np.full(30, 2.5))


def test_ewma_step_response():
    x = np.r_[np.zeros(5), np.ones(20)]
    s = ewma(x)
    t = np.arange(1, 21)
    assert np.allclose(s[5:], 1 - 0.8 ** t)


def test_ewma_recursion_and_nan_carry():
    x = np.array([1.0, np.nan, 3.0, 4.0])
    s = ewma(x)
    assert s[1] == 1.0 and s[2] == pytest.approx(0.2 * 3 + 0.8 * 1) and s[3] == pytest.approx(0.2 * 4 + 0.8 * s[2])


def test_trailing_window_rule():
    x = np.arange(250, dtype=float)
    m = trailing_mean(x)
    assert np.all(np.isnan(m[:99]))
    assert m[99] == pytest.approx(np.mean(x[:100]))
    assert m[249] == pytest.approx(np.mean(x[150:]))


def sample_log(rng, rows=250):
    log = MetricsLog.for_agents(2)
    for i in range(rows):
        log.append(step=i, reward=rng.normal(), rate_sum=rng.random(), omega_idle=rng.random(),
                   omega_occupied=0.0, collisions=int(rng.integers(3)), power_0=rng.random() * 5e-3,
                   power_1=1e-3 / 3, critic_loss=math.nan if i < 10 else rng.normal(),
                   actor_loss=math.nan, alpha_d=math.exp(rng.normal()), alpha_c=0.1)
    return log


def test_csv_round_trip(tmp_path, rng):
    log = sample_log(rng)
    log.to_csv(tmp_path / "m.csv")
    back = MetricsLog.from_csv(tmp_path / "m.csv")
    assert back.columns == log.columns
    assert np.array_equal(back.as_array(), log.as_array(), equal_nan=True)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(allow_nan=True, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_csv_round_trip_arbitrary_floats(tmp_path_factory, values):
    log = MetricsLog(["step", "reward"])
    for i, v in enumerate(values):
        log.append(step=i, reward=v)
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    log.to_csv(path)
    assert np.array_equal(MetricsLog.from_csv(path).as_array(), log.as_array(), equal_nan=True)


def test_emit_metrics_files(tmp_path, rng):
    log = sample_log(rng)
    raw, smooth = emit_metrics(log, tmp_path / "out" / "metrics.csv")
    header = smooth.read_text().splitlines()[0].split(",")
    assert "rate_sum [bit/s/Hz]" in header and "power_0_ewma [W]" in header
    s = MetricsLog.from_csv(smooth)
    col = s.column("reward_mean100")
    assert np.all(np.isnan(col[:99])) and not np.any(np.isnan(col[99:]))
    assert np.allclose(s.column("reward_ewma"), ewma(log.column("reward")))
    with pytest.raises(ValueError):
        emit_metrics(MetricsLog(["step"]), tmp_path / "e.csv")


def test_summary_ignores_missing(rng):
    log = sample_log(rng, rows=1200)
    summ = log.summary(1000)
    assert math.isnan(summ["actor_loss"])
    assert summ["reward"] == pytest.approx(np.mean(log.column("reward")[-1000:]))
    with pytest.raises(KeyError):
        log.append(step=1)
