import numpy as np
import pytest

from ccim.saradc import (
    AdcConfig,
    CdacInstance,
    convert,
    dnl_inl,
    ideal_code,
    sample_cdac,
    transition_levels,
)

IDEAL = CdacInstance.ideal()
CFG = AdcConfig()
UNIPOLAR = AdcConfig(architecture="unipolar")


def bisect_threshold(cdac, cfg, k, lo=-80.0, hi=80.0):
    """Lowest input giving code >= k, found by bisection on convert alone."""
    if convert(cdac, cfg, lo) >= k:
        return -np.inf
    if convert(cdac, cfg, hi) < k:
        return np.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if convert(cdac, cfg, mid) >= k:
            hi = mid
        else:
            lo = mid
    return hi


class TestConvert:
    @pytest.mark.parametrize(
        "v, code", [(0.0, 64), (62.0, 126), (200.0, 127), (3.87548, 68), (-0.5, 63), (0.5, 65), (-62.0, 2)]
    )
    def test_ideal_examples(self, v, code):
        assert convert(IDEAL, CFG, v) == code

    def test_ideal_matches_closed_form(self, rng):
        v = rng.uniform(-63.49, 63.49, size=100_000)
        v[:2000] = np.clip(np.round(v[:2000] * 2) / 2, -63, 63)  # exact ties
        codes = convert(IDEAL, CFG, v)
        half_away = np.sign(v) * np.floor(np.abs(v) + 0.5)
        assert np.array_equal(codes, np.clip(64 + half_away, 0, 127).astype(int))
        assert np.array_equal(codes, ideal_code(v))

    def test_unipolar_ideal(self, rng):
        v = rng.uniform(-70, 70, size=10_000)
        assert np.array_equal(convert(IDEAL, UNIPOLAR, v), ideal_code(v, UNIPOLAR))
        assert convert(IDEAL, UNIPOLAR, 0.0) == 64
        assert convert(IDEAL, UNIPOLAR, -200.0) == 0

    def test_symmetry_ideal(self, rng):
        v = rng.uniform(-62, 62, size=10_000)
        assert np.array_equal(convert(IDEAL, CFG, -v) - 64, -(convert(IDEAL, CFG, v) - 64))

    def test_symmetry_mismatched(self, rng):
        v = rng.uniform(-70, 70, size=10_000)
        for seed in range(20):
            cdac = sample_cdac(0.0296, seed)
            assert np.array_equal(convert(cdac, CFG, -v) - 64, -(convert(cdac, CFG, v) - 64))

    def test_monotone(self, rng):
        v = np.sort(rng.uniform(-70, 70, size=20_000))
        for seed in range(10):
            for cfg in (CFG, UNIPOLAR):
                codes = convert(sample_cdac(0.1, seed), cfg, v)
                assert np.all(np.diff(codes) >= 0)

    def test_noise_determinism(self):
        cfg = AdcConfig(comparator_noise_std=0.3)
        v = np.linspace(-10, 10, 1000)
        a = convert(IDEAL, cfg, v, np.random.default_rng(5))
        b = convert(IDEAL, cfg, v, np.random.default_rng(5))
        c = convert(IDEAL, cfg, v, np.random.default_rng(6))
        assert np.array_equal(a, b) and not np.array_equal(a, c)
        with pytest.raises(ValueError):
            convert(IDEAL, cfg, v)

    def test_offset(self):
        cfg = AdcConfig(comparator_offset=0.3)
        assert convert(IDEAL, cfg, 0.25) == 65

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AdcConfig(offset_code=128)
        with pytest.raises(ValueError):
            AdcConfig(architecture="flash")


class TestCdac:
    def test_ideal_weights(self):
        assert np.array_equal(IDEAL.w, 2.0 ** np.arange(7))

    def test_sample_std(self):
        w = np.stack([sample_cdac(0.0296, s).w for s in range(4000)])
        rel = w / 2.0 ** np.arange(7) - 1
        assert rel[:, 0].std() == pytest.approx(0.0296 / 4, rel=0.05)
        assert rel[:, 6].std() == pytest.approx(0.0296 / 32, rel=0.05)

    def test_zero_sigma_is_ideal(self):
        assert np.array_equal(sample_cdac(0.0, 3).w, IDEAL.w)


class TestTransitions:
    def test_ideal(self):
        t = transition_levels(IDEAL, CFG).thresholds
        assert t[0] == -np.inf  # code 0 unused in sign-magnitude mode
        assert np.array_equal(t[1:], np.arange(2, 128) - 64.5)
        assert t[63] == -0.5  # 63 -> 64

    def test_ideal_unipolar(self):
        t = transition_levels(IDEAL, UNIPOLAR).thresholds
        assert np.array_equal(t, np.arange(1, 128) - 64.5)

    @pytest.mark.parametrize("cfg", [CFG, UNIPOLAR, AdcConfig(comparator_offset=0.37)])
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_against_bisection(self, cfg, seed):
        cdac = sample_cdac(0.2, seed)
        t = transition_levels(cdac, cfg).thresholds
        for k in range(1, 128):
            ref = bisect_threshold(cdac, cfg, k)
            if np.isinf(ref):
                assert t[k - 1] == ref
            else:
                assert abs(t[k - 1] - ref) < 1e-9

    def test_noisy_rejected(self):
        with pytest.raises(ValueError):
            transition_levels(IDEAL, AdcConfig(comparator_noise_std=0.1))

    def test_non_monotonic_flagged(self):
        w = 2.0 ** np.arange(7)
        w[5] = 29.0  # below 1+2+4+8+16
        cdac = CdacInstance(w)
        tl = transition_levels(cdac, UNIPOLAR)
        assert not tl.dac_monotonic
        assert tl.missing_codes
        assert np.all(np.diff(tl.thresholds) >= 0)


class TestDnlInl:
    def test_ideal_zero(self):
        for cfg in (CFG, UNIPOLAR):
            lin = dnl_inl(IDEAL, cfg)
            assert np.max(np.abs(lin.dnl)) < 1e-9 and np.max(np.abs(lin.inl)) < 1e-9
        assert len(dnl_inl(IDEAL, CFG).dnl) == 125
        assert len(dnl_inl(IDEAL, UNIPOLAR).dnl) == 126

    def test_linear_scaling(self):
        def median_rms(sigma):
            return np.median([dnl_inl(sample_cdac(sigma, s), CFG).dnl_rms for s in range(300)])

        ratio = median_rms(2 * 0.0296) / median_rms(0.0296)
        assert abs(ratio / 2 - 1) <= 0.25
