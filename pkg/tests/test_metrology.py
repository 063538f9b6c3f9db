import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from ccim import metrology as m
from ccim.acim2d import AnalogParams
from ccim.cmacro import MacroConfig
from ccim.saradc import AdcConfig


@pytest.fixture(scope="module")
def ideal_sweep():
    return m.transfer_sweep(MacroConfig())


def test_sweep_endpoints(ideal_sweep):
    s = ideal_sweep
    assert len(s.points) == 255 == len(s.inl)
    code = dict(zip(s.x.tolist(), s.mean_code.tolist()))
    assert code[127] == -126
    assert code[-127] == 126
    assert code[0] == 0


def test_sweep_true_value(ideal_sweep):
    np.testing.assert_array_equal(ideal_sweep.true_code * 2048, -2032 * ideal_sweep.x)


def test_ideal_sweep_is_pure_quantizer(ideal_sweep):
    assert ideal_sweep.matches_ideal
    assert np.max(np.abs(ideal_sweep.inl_reference)) <= 0.5


def test_ideal_sweep_gain(ideal_sweep):
    assert ideal_sweep.gain == pytest.approx(-2032 / 2048, rel=0.005)


def test_sweep_rows_schema(ideal_sweep):
    rows = list(ideal_sweep.to_rows())
    assert len(rows) == 255
    assert set(rows[0]) == {"x", "mean_code", "ideal_code", "true_code", "analog", "inl", "inl_endpoint"}


def test_sweep_averaging_with_noise():
    cfg = MacroConfig(adc=AdcConfig(comparator_noise_std=0.3))
    a = m.transfer_sweep(cfg, repeats=8, noise_seed=3)
    b = m.transfer_sweep(cfg, repeats=8, noise_seed=3)
    np.testing.assert_array_equal(a.mean_code, b.mean_code)
    assert not a.matches_ideal
    assert np.max(np.abs(a.inl_reference)) < 1.5


def test_rms_report_consistency():
    r = m.rms_error(MacroConfig(), 5000, seed=1)
    assert r.rms_pct_range == r.rms_pct_fs / 2
    assert r.samples == 10000
    assert r.rms_lsb == pytest.approx(r.rms_pct_fs / 100 * 258064 / 2048)


def test_rms_reproducible_and_chunk_independent():
    a = m.rms_error(MacroConfig.mismatch(5), 3000, seed=9, chunk=1000)
    b = m.rms_error(MacroConfig.mismatch(5), 3000, seed=9, chunk=1000)
    assert a == b
    c = m.rms_error(MacroConfig.mismatch(5), 3000, seed=10, chunk=1000)
    assert c.sum_sq_error != a.sum_sq_error


def test_rms_rejects_zero_trials():
    with pytest.raises(ValueError):
        m.rms_error(MacroConfig(), 0, seed=0)


def test_rms_near_floor():
    r = m.rms_error(MacroConfig(), 200_000, seed=4)
    assert r.rms_pct_fs == pytest.approx(m.QUANT_FLOOR_PCT, abs=0.01)
    assert abs(r.mean_error_lsb) < 0.01


def test_sigma_zero_equals_ideal():
    ideal = m.rms_error(MacroConfig(), 4000, seed=2)
    zero = m.rms_error(MacroConfig.mismatch(77, sigma_u=0.0), 4000, seed=2)
    assert zero.sum_sq_error == ideal.sum_sq_error


def test_mismatch_sweep_curve():
    pts = m.mismatch_sweep(MacroConfig(), [0.0, 0.03, 0.12], seeds_per_point=4, trials_per_seed=2000)
    assert [p.sigma for p in pts] == [0.0, 0.03, 0.12]
    assert pts[0].p95 - pts[0].p05 < 0.02
    assert m.is_non_decreasing(pts)
    rows = list(csv.reader(io.StringIO(m.curve_csv(pts))))
    assert rows[0] == ["sigma", "median", "p05", "p95"]
    assert len(rows) == 4
    assert float(rows[2][1]) == pts[1].median


def test_mismatch_sweep_sigma_zero_matches_ideal_rms():
    pts = m.mismatch_sweep(MacroConfig(), [0.0], seeds_per_point=2, trials_per_seed=1500, seed=3)
    ideal = [m.rms_error(MacroConfig(), 1500, seed=3 + s).rms_pct_fs for s in range(2)]
    assert pts[0].values == ideal


def test_mismatch_sweep_rejects_empty():
    with pytest.raises(ValueError):
        m.mismatch_sweep(MacroConfig(), [], 2)


def _pt(sigma, med, se):
    return m.MismatchPoint(sigma, med, med, med, med, se, [])


def test_non_decreasing_tolerance():
    assert m.is_non_decreasing([_pt(0, 1.0, 0.1), _pt(1, 0.8, 0.1)])
    assert not m.is_non_decreasing([_pt(0, 1.0, 0.01), _pt(1, 0.8, 0.01)])


def _synthetic(y):
    x = np.arange(-127, 128)
    y = np.asarray(y, dtype=float)
    z = np.zeros_like(y)
    return m.SweepResult(x, y, np.round(y), y, y, z, m.endpoint_inl(x, y), 1.0, 0.0)


def test_piecewise_linear_kink_peaks_at_zero():
    x = np.arange(-127, 128)
    y = np.where(x < 0, 1.01 * x, x)  # 1% gain asymmetry on the whole signal
    loc, ratio = m.max_inl_location(_synthetic(y), domain="analog")
    assert loc == 0 and ratio == 1.0


def test_linear_transfer_has_no_location():
    x = np.arange(-127, 128)
    assert m.max_inl_location(_synthetic(0.5 * x), domain="analog") == (None, None)


def test_zero_crossing_ideal_undefined():
    rep = m.zero_crossing_inl(MacroConfig(), [0, 1])
    assert rep.locations == [None, None]
    assert rep.fraction_near_zero is None


def test_zero_crossing_asymmetry_is_co_maximal():
    # Only the ACIM residual sees the asymmetry, so the hand-over at |x|=64
    # rivals the zero crossing; both peaks are within a few percent.
    cfg = MacroConfig(analog=AnalogParams(sign_gain_asymmetry=0.01))
    rep = m.zero_crossing_inl(cfg, [0], domain="analog")
    assert rep.zero_peak_ratios[0] >= 0.95


def test_zero_crossing_mismatch_report():
    base = MacroConfig.mismatch(0, analog=AnalogParams(sign_gain_asymmetry=0.01))
    rep = m.zero_crossing_inl(base, range(3))
    assert rep.seeds == 3 and len(rep.locations) == 3
    assert rep.fraction_near_zero is None or 0.0 <= rep.fraction_near_zero <= 1.0
    assert set(rep.to_dict()) >= {"locations", "fraction_near_zero", "zero_peak_ratios"}


def test_adc_characterization_ideal():
    r = m.adc_characterization(0.0, seeds=3)
    assert r.dnl_rms_median < 1e-9 and r.inl_max_median < 1e-9
    assert r.monotonic_fraction == 1.0


def test_adc_characterization_scales_with_sigma():
    a = m.adc_characterization(0.03, seeds=40)
    b = m.adc_characterization(0.06, seeds=40)
    # Same seeds, so every instance's errors scale by exactly 2 to first order.
    assert b.dnl_rms_median == pytest.approx(2 * a.dnl_rms_median, rel=0.05)
    assert a.reference_dnl_rms == 0.33


def test_adc_characterization_lsb_units():
    a = m.adc_characterization(0.03, seeds=40, lsb_units=16)
    b = m.adc_characterization(0.03, seeds=40, lsb_units=4)
    assert b.dnl_rms_median == pytest.approx(2 * a.dnl_rms_median, rel=0.05)


def test_trial_rng_keyed():
    a = m.trial_rng(1, 2).integers(0, 1 << 30, 4)
    b = m.trial_rng(1, 2).integers(0, 1 << 30, 4)
    c = m.trial_rng(1, 3).integers(0, 1 << 30, 4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_mismatch_cfg_replaces_sigma():
    cfg = m.mismatch_cfg(MacroConfig(), 0.05, 11)
    assert cfg.mode == "mismatch" and cfg.seed == 11 and cfg.analog.sigma_u == 0.05
    assert replace(cfg, seed=0).analog == cfg.analog
