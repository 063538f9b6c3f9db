"""Measurement harnesses: transfer sweep, RMS error, mismatch Monte Carlo, ADC linearity.

All randomness flows from ``numpy.random.SeedSequence(seed, spawn_key=...)``
keyed by chunk or seed index, so results do not depend on how work is split.
Integer error sums are accumulated exactly before any float conversion.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import saradc
from .cmacro import FULL_SCALE, N_UNITS, Macro, MacroConfig, full_precision_reference, oracle_reference
from .numfmt import DCIM_UNIT, smf_encode_array
from .saradc import AdcConfig

REFERENCE_RMS_PCT = 0.435
REFERENCE_DNL_RMS = 0.33
DEFAULT_CHUNK = 1 << 16
QUANT_FLOOR_PCT = 100 * DCIM_UNIT / np.sqrt(12) / FULL_SCALE


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# Transfer sweep


@dataclass
class SweepResult:
    x: np.ndarray
    mean_code: np.ndarray
    ideal_code: np.ndarray
    true_code: np.ndarray  # exact MAC / 2048
    analog: np.ndarray  # DCIM count plus the un-quantized array sum, in LSB
    inl: np.ndarray  # against the least-squares line
    inl_endpoint: np.ndarray
    gain: float
    offset: float

    @property
    def inl_reference(self) -> np.ndarray:
        """Deviation from the exact transfer line (no fitting)."""
        return self.mean_code - self.true_code

    @property
    def points(self):
        return list(zip(self.x.tolist(), self.mean_code.tolist(), self.ideal_code.tolist()))

    @property
    def max_abs_inl(self) -> float:
        return float(np.max(np.abs(self.inl)))

    @property
    def matches_ideal(self) -> bool:
        return bool(np.array_equal(self.mean_code, self.ideal_code))

    def to_rows(self):
        for k in range(len(self.x)):
            yield {
                "x": int(self.x[k]),
                "mean_code": float(self.mean_code[k]),
                "ideal_code": int(self.ideal_code[k]),
                "true_code": float(self.true_code[k]),
                "analog": float(self.analog[k]),
                "inl": float(self.inl[k]),
                "inl_endpoint": float(self.inl_endpoint[k]),
            }


def sweep_operands(weight: int = -127):
    """Inputs ``(x, -x)`` for x in [-127, 127] against weights fixed at ``(w, w)``."""
    x = np.arange(-127, 128)
    inputs = np.stack([smf_encode_array(x), smf_encode_array(-x)], axis=-1)
    inputs = np.repeat(inputs[:, None, :], 8, axis=1)
    weights = np.full((8, 2), smf_encode_array(np.array([weight]))[0], dtype=np.uint8)
    return x, inputs, weights


def transfer_sweep(cfg: MacroConfig = MacroConfig(), unit: int = 0, repeats: int = 1, noise_seed: int = 0) -> SweepResult:
    """Sweep the input from negative to positive full scale with weights at -127.

    ``repeats`` > 1 averages the real output code over independent comparator
    noise draws (only meaningful with ``comparator_noise_std`` > 0).
    """
    x, inputs, weights = sweep_operands()
    macro = Macro(cfg)
    w = np.broadcast_to(weights, inputs.shape)
    units = np.full(len(x), unit)
    rng = trial_rng(noise_seed, 0) if cfg.adc.comparator_noise_std > 0 else None
    acc = np.zeros(len(x))
    for _ in range(repeats):
        d = macro.mac_batch(inputs, w, units, rng, detail=True)
        acc += d["re"]
    mean = acc / repeats
    analog = d["re_dcim"] + d["re_v"]
    ideal, _ = oracle_reference(inputs, w, cfg.partition)
    full, _ = full_precision_reference(inputs, w)
    gain, offset = np.polyfit(x, mean, 1)
    inl = mean - (gain * x + offset)
    end_slope = (mean[-1] - mean[0]) / (x[-1] - x[0])
    inl_end = mean - (mean[0] + end_slope * (x - x[0]))
    return SweepResult(
        x, mean, np.asarray(ideal), full / DCIM_UNIT, analog, inl, inl_end, float(gain), float(offset)
    )


# ---------------------------------------------------------------------------
# RMS error


@dataclass
class RmsReport:
    rms_pct_fs: float
    rms_pct_range: float
    rms_lsb: float
    mean_error_lsb: float
    trials: int
    samples: int
    seed: int
    sum_sq_error: int
    reference_rms_pct: float = REFERENCE_RMS_PCT
    quantization_floor_pct: float = QUANT_FLOOR_PCT

    def to_dict(self) -> dict:
        return asdict(self)


def rms_error(cfg: MacroConfig, trials: int, seed: int, chunk: int = DEFAULT_CHUNK) -> RmsReport:
    """RMS of ``code*2048 - exact`` over uniform random SMF inputs and weights.

    Each trial is one complex MAC and contributes its real and imaginary error.
    Trial ``t`` runs on unit ``t mod 8``. Percentages are relative to the
    positive full scale 258064 and to the full range 516128.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    macro = Macro(cfg)
    sum_sq = 0
    sum_err = 0
    for c, start in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - start)
        rng = trial_rng(seed, c)
        x = rng.integers(0, 256, size=(n, 8, 2), dtype=np.uint8)
        w = rng.integers(0, 256, size=(n, 8, 2), dtype=np.uint8)
        units = (start + np.arange(n)) % N_UNITS
        re, im = macro.mac_batch(x, w, units, rng)
        fre, fim = full_precision_reference(x, w)
        for code, exact in ((re, fre), (im, fim)):
            err = code.astype(np.int64) * DCIM_UNIT - exact
            sum_sq += int(np.dot(err, err))
            sum_err += int(err.sum())
    samples = 2 * trials
    rms = np.sqrt(sum_sq / samples)
    pct = 100 * rms / FULL_SCALE
    return RmsReport(
        rms_pct_fs=float(pct),
        rms_pct_range=float(pct / 2),
        rms_lsb=float(rms / DCIM_UNIT),
        mean_error_lsb=float(sum_err / samples / DCIM_UNIT),
        trials=trials,
        samples=samples,
        seed=seed,
        sum_sq_error=sum_sq,
    )


# ---------------------------------------------------------------------------
# Mismatch Monte Carlo


@dataclass
class MismatchPoint:
    sigma: float
    median: float
    p05: float
    p95: float
    mean: float
    median_stderr: float
    values: list = field(repr=False)


def mismatch_cfg(base: MacroConfig, sigma: float, instance_seed: int) -> MacroConfig:
    return replace(base, mode="mismatch", seed=instance_seed, analog=replace(base.analog, sigma_u=sigma))


def mismatch_sweep(
    base: MacroConfig,
    sigma_list,
    seeds_per_point: int,
    trials_per_seed: int = 20_000,
    seed: int = 0,
) -> list[MismatchPoint]:
    """RMS error distribution (% of +FS) across mismatch instances at each sigma.

    Instance ``s`` and its trial inputs use the same seeds at every sigma, so
    the curve compares like with like.
    """
    sigma_list = list(sigma_list)
    if not sigma_list:
        raise ValueError("sigma_list must not be empty")
    points = []
    for sigma in sigma_list:
        vals = []
        for s in range(seeds_per_point):
            instance_seed = int(np.random.SeedSequence(seed, spawn_key=(s,)).generate_state(1)[0])
            rep = rms_error(mismatch_cfg(base, sigma, instance_seed), trials_per_seed, seed=seed + s)
            vals.append(rep.rms_pct_fs)
        v = np.array(vals)
        stderr = 1.2533 * v.std(ddof=1) / np.sqrt(len(v)) if len(v) > 1 else 0.0
        points.append(
            MismatchPoint(
                sigma=float(sigma),
                median=float(np.median(v)),
                p05=float(np.percentile(v, 5)),
                p95=float(np.percentile(v, 95)),
                mean=float(v.mean()),
                median_stderr=float(stderr),
                values=vals,
            )
        )
    return points


def curve_csv(points: list[MismatchPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sigma", "median", "p05", "p95"])
    for p in points:
        writer.writerow([repr(p.sigma), repr(p.median), repr(p.p05), repr(p.p95)])
    return buf.getvalue()


def is_non_decreasing(points: list[MismatchPoint], n_sigma: float = 2.0) -> bool:
    """Medians never drop by more than ``n_sigma`` combined standard errors."""
    for a, b in zip(points, points[1:]):
        tol = n_sigma * np.hypot(a.median_stderr, b.median_stderr)
        if b.median < a.median - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Zero-crossing INL


@dataclass
class ZeroCrossingReport:
    seeds: int
    window: int
    locations: list  # x of max |INL| per seed; None where the sweep equals the ideal quantizer
    zero_peak_ratios: list  # max |INL| within the window over global max |INL|
    fraction_near_zero: float | None
    domain: str = "code"

    def to_dict(self) -> dict:
        return asdict(self)


def endpoint_inl(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y - (y[0] + (y[-1] - y[0]) * (x - x[0]) / (x[-1] - x[0]))


def max_inl_location(sweep: SweepResult, domain: str = "code", window: int = 4):
    """``(x at max |endpoint INL|, zero-window peak / global peak)``.

    ``domain="code"`` uses the (averaged) output codes and reports ``None``
    when they equal the ideal quantizer; ``"analog"`` uses the noise-free
    pre-quantization transfer and reports ``None`` when it is exactly linear.
    """
    if domain == "code":
        if sweep.matches_ideal:
            return None, None
        inl = sweep.inl_endpoint
    else:
        inl = endpoint_inl(sweep.x, sweep.analog)
        if np.max(np.abs(inl)) < 1e-9:
            return None, None
    a = np.abs(inl)
    near = a[np.abs(sweep.x) <= window].max()
    return int(sweep.x[int(np.argmax(a))]), float(near / a.max())


def zero_crossing_inl(
    base: MacroConfig,
    seeds,
    window: int = 4,
    repeats: int = 1,
    domain: str = "code",
) -> ZeroCrossingReport:
    """Where along the transfer sweep the endpoint INL peaks, across instances.

    ``base`` supplies mode, sigma, comparator noise and any sign-path
    asymmetry; each entry of ``seeds`` replaces the instance seed (mismatch
    mode) and the noise seed. The endpoint line is used because a
    least-squares line spreads a kink's deviation between the kink and the
    sweep ends. The result is descriptive; nothing here asserts a location.
    """
    locs, ratios = [], []
    for s in seeds:
        cfg = replace(base, seed=int(s)) if base.mode == "mismatch" else base
        loc, ratio = max_inl_location(transfer_sweep(cfg, repeats=repeats, noise_seed=int(s)), domain, window)
        locs.append(loc)
        ratios.append(ratio)
    defined = [loc for loc in locs if loc is not None]
    frac = float(np.mean([abs(loc) <= window for loc in defined])) if defined else None
    return ZeroCrossingReport(len(locs), window, locs, ratios, frac, domain)


# ---------------------------------------------------------------------------
# ADC characterization


@dataclass
class AdcCharReport:
    sigma_u: float
    lsb_units: int
    seeds: int
    dnl_rms_median: float
    dnl_rms_p05: float
    dnl_rms_p95: float
    dnl_max_median: float
    inl_max_median: float
    monotonic_fraction: float
    dnl_rms: list = field(repr=False)
    reference_dnl_rms: float = REFERENCE_DNL_RMS

    def to_dict(self) -> dict:
        return asdict(self)


def adc_characterization(
    sigma_u: float, seeds: int, lsb_units: int = 16, cfg: AdcConfig = AdcConfig(), seed: int = 0
) -> AdcCharReport:
    rms, dmax, imax, mono = [], [], [], []
    for s in range(seeds):
        cdac = saradc.sample_cdac(sigma_u, np.random.SeedSequence(seed, spawn_key=(s,)), lsb_units)
        lin = saradc.dnl_inl(cdac, cfg)
        rms.append(lin.dnl_rms)
        dmax.append(lin.dnl_max)
        imax.append(lin.inl_max)
        mono.append(lin.dac_monotonic)
    r = np.array(rms)
    return AdcCharReport(
        sigma_u=sigma_u,
        lsb_units=lsb_units,
        seeds=seeds,
        dnl_rms_median=float(np.median(r)),
        dnl_rms_p05=float(np.percentile(r, 5)),
        dnl_rms_p95=float(np.percentile(r, 95)),
        dnl_max_median=float(np.median(dmax)),
        inl_max_median=float(np.median(imax)),
        monotonic_fraction=float(np.mean(mono)),
        dnl_rms=[float(v) for v in r],
    )
