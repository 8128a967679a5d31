import numpy as np
import pytest

from crnsac.study import detection_rate, run_sensing_study, write_study


def study(**kw):
    base = dict(sample_rate=1e4, n_sensed=1, noise_var=1.0, trials=1000, rng=np.random.default_rng(7))
    base.update(kw)
    return run_sensing_study(**base)


def test_single_realization_below_closed_form():
    rows = study(tau_grid=[0.002, 0.004, 0.008], tc_grid=[10.0], snr_grid=[1.0])
    assert all(r.realizations == 1 for r in rows)
    assert all(r.empirical_pde < r.analytic_pde for r in rows)


def test_zero_snr_detects_like_false_alarm():
    # S = 200 and 500: large enough for the CLT form, whose error is ~0.03 at S = 20
    rows = study(tau_grid=[0.02, 0.05], tc_grid=[1e-3], snr_grid=[0.0])
    for r in rows:
        assert abs(r.empirical_pde - r.analytic_pfa) < 0.03


def test_many_realizations_near_closed_form():
    # 40 blocks of 20 samples at snr 2
    rows = study(tau_grid=[0.08], tc_grid=[0.002], snr_grid=[2.0])
    assert rows[0].realizations == 40 and rows[0].n_samples == 800
    assert abs(rows[0].empirical_pde - rows[0].analytic_pde) < 0.05


def test_awgn_rate_matches_closed_form():
    from crnsac.sensing import p_detect

    rate = detection_rate(True, 1.0, 0.3, 2000, 1, 1.15, 20_000, np.random.default_rng(1), fading=False)
    assert abs(rate - p_detect(1.15, 1.0, 0.3, 2000)) < 0.01


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        study(tau_grid=[], tc_grid=[1.0], snr_grid=[1.0])


def test_write_study(tmp_path):
    rows = study(tau_grid=[0.002], tc_grid=[1e-3], snr_grid=[1.0], trials=50)
    text = write_study(rows, tmp_path / "s.csv").read_text().splitlines()
    assert text[0].startswith("tau [s],t_c [s],snr") and len(text) == 2
