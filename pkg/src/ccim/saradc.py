"""7-bit SAR ADC behavioral model with CDAC mismatch and comparator non-idealities.

Input is the charge-domain sum in LSB units (see :mod:`ccim.acim2d`). Two
conversion schemes are available:

``sign-magnitude`` (default)
    The first decision resolves the polarity of the sampled charge against the
    0x40 midpoint, then bits 5..0 approximate the magnitude with the reference
    polarity flipped for negative inputs. Codes span ``64 +/- 63``; code 0 is
    never produced. The transfer is odd-symmetric about code 64 for every CDAC
    instance, which is what makes global sign inversion exact in the macro.

``unipolar``
    A textbook SAR over bits 6..0 on ``DAC(0x40) + v``. Ties round upward and
    mismatch breaks the odd symmetry; kept for comparison.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

N_BITS = 7
N_CODES = 1 << N_BITS
MIDCODE = 0x40
ARCHITECTURES = ("sign-magnitude", "unipolar")


@dataclass(frozen=True)
class AdcConfig:
    offset_code: int = MIDCODE
    comparator_offset: float = 0.0
    comparator_noise_std: float = 0.0
    architecture: str = "sign-magnitude"

    def __post_init__(self):
        if not 0 <= self.offset_code < N_CODES:
            raise ValueError(f"offset_code must be in [0, {N_CODES - 1}]")
        if self.comparator_noise_std < 0:
            raise ValueError("comparator_noise_std must be non-negative")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class CdacInstance:
    """Effective bit weights in LSB units; nominal ``w[b] = 2**b``."""

    w: np.ndarray = field(default_factory=lambda: 2.0 ** np.arange(N_BITS))
    seed: object = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (N_BITS,):
            raise ValueError(f"CDAC needs {N_BITS} bit weights")
        if np.any(self.w <= 0):
            raise ValueError("CDAC bit weights must be positive")
        self.w.setflags(write=False)

    @classmethod
    def ideal(cls) -> "CdacInstance":
        return cls()

    @property
    def dac_levels(self) -> np.ndarray:
        """DAC output for every 7-bit code."""
        codes = np.arange(N_CODES)
        bits = (codes[:, None] >> np.arange(N_BITS)) & 1
        return bits @ self.w

    @property
    def is_monotonic(self) -> bool:
        return bool(np.all(np.diff(self.dac_levels) > 0))


def sample_cdac(sigma_u: float, seed, lsb_units: int = 16) -> CdacInstance:
    """Bit ``b`` is ``lsb_units * 2**b`` parallel unit caps, so its std is ``sigma_u/sqrt(that)``."""
    rng = np.random.default_rng(seed)
    nominal = 2.0 ** np.arange(N_BITS)
    std = sigma_u / np.sqrt(lsb_units * nominal)
    return CdacInstance(nominal * (1.0 + std * rng.standard_normal(N_BITS)), seed)


def _noise(cfg: AdcConfig, shape, rng):
    if cfg.comparator_noise_std == 0:
        return None
    if rng is None:
        raise ValueError("comparator noise requires a random generator")
    return rng.normal(0.0, cfg.comparator_noise_std, size=(N_BITS,) + shape)


def convert(cdac: CdacInstance, cfg: AdcConfig, v, rng: np.random.Generator | None = None):
    """Convert LSB-unit input(s) to 7-bit code(s); saturation clamps to [0, 127].

    With noise enabled each comparison draws a fresh sample from ``rng``.
    """
    scalar = np.ndim(v) == 0
    v = np.asarray(v, dtype=float)
    noise = _noise(cfg, v.shape, rng)
    off = cfg.comparator_offset

    def cmp_input(k, x):
        return x + off if noise is None else x + off + noise[k]

    if cfg.architecture == "sign-magnitude":
        levels = cdac.dac_levels[: N_CODES // 2]
        s = np.where(cmp_input(0, v) >= 0.0, 1, -1)
        sv = s * v
        m = np.zeros(v.shape, dtype=np.int64)
        for k, b in enumerate(range(N_BITS - 2, -1, -1), start=1):
            trial = m | (1 << b)
            m = np.where(cmp_input(k, sv) >= levels[trial] - 0.5, trial, m)
        code = np.clip(cfg.offset_code + s * m, 0, N_CODES - 1)
    else:
        levels = cdac.dac_levels
        u = v + levels[cfg.offset_code]
        code = np.zeros(v.shape, dtype=np.int64)
        for k, b in enumerate(range(N_BITS - 1, -1, -1)):
            trial = code | (1 << b)
            code = np.where(cmp_input(k, u) >= levels[trial] - 0.5, trial, code)
    code = code.astype(np.int64)
    return int(code) if scalar else code


def end_codes(cfg: AdcConfig = AdcConfig()) -> tuple[int, int]:
    """Lowest and highest code the converter can produce."""
    if cfg.architecture == "sign-magnitude":
        half = N_CODES // 2 - 1
        return max(cfg.offset_code - half, 0), min(cfg.offset_code + half, N_CODES - 1)
    return 0, N_CODES - 1


def ideal_code(v, cfg: AdcConfig = AdcConfig()):
    """Closed-form output of a noise-free ideal instance (the reference quantizer)."""
    v = np.asarray(v, dtype=float)
    if cfg.architecture == "sign-magnitude":
        mag = np.minimum(np.floor(np.abs(v) + 0.5), N_CODES // 2 - 1)
        return np.clip(cfg.offset_code + np.where(v < 0, -mag, mag), 0, N_CODES - 1).astype(np.int64)
    return np.clip(np.floor(cfg.offset_code + v + 0.5), 0, N_CODES - 1).astype(np.int64)


@dataclass
class TransitionLevels:
    """``thresholds[k-1]`` is the lowest input giving a code of at least ``k``.

    ``-inf`` marks codes already reached at the most negative input (code 0 in
    sign-magnitude mode is never produced, so ``thresholds[0]`` is ``-inf``
    there); ``+inf`` marks codes that are never reached.
    """

    thresholds: np.ndarray
    dac_monotonic: bool

    @property
    def missing_codes(self) -> list[int]:
        t = self.thresholds
        out = [k for k in range(1, N_CODES - 1) if np.isfinite(t[k - 1]) and t[k] == t[k - 1]]
        if np.isinf(t[-1]) and t[-1] > 0:
            out.append(N_CODES - 1)
        return out


def _candidates(cdac: CdacInstance, cfg: AdcConfig) -> np.ndarray:
    off = cfg.comparator_offset
    if cfg.architecture == "sign-magnitude":
        lv = cdac.dac_levels[1 : N_CODES // 2] - 0.5
        pts = np.concatenate([[-off], lv - off, off - lv])
    else:
        lv = cdac.dac_levels[1:] - 0.5
        pts = lv - cdac.dac_levels[cfg.offset_code] - off
    return np.unique(pts)


def transition_levels(cdac: CdacInstance, cfg: AdcConfig = AdcConfig()) -> TransitionLevels:
    """Exact code transition levels of a noise-free converter.

    The code is piecewise constant between comparator decision thresholds, so
    evaluating it at and just above every threshold pins each transition.
    """
    if cfg.comparator_noise_std != 0:
        raise ValueError("transition levels are defined for a noise-free comparator")
    pts = _candidates(cdac, cfg)
    at = convert(cdac, cfg, pts)
    above = convert(cdac, cfg, np.nextafter(pts, np.inf))
    reach = np.maximum(at, above)
    floor_code = convert(cdac, cfg, pts[0] - 1.0)
    t = np.full(N_CODES - 1, np.inf)
    for k in range(1, N_CODES):
        if floor_code >= k:
            t[k - 1] = -np.inf
            continue
        hit = np.nonzero(reach >= k)[0]
        if hit.size:
            t[k - 1] = pts[hit[0]]
    return TransitionLevels(t, cdac.is_monotonic)


@dataclass
class AdcLinearity:
    codes: np.ndarray  # codes with a finite width
    dnl: np.ndarray
    inl: np.ndarray  # per finite threshold, endpoint fit
    inl_codes: np.ndarray
    dnl_rms: float
    dnl_max: float
    inl_max: float
    dac_monotonic: bool
    missing_codes: list


def dnl_inl(cdac: CdacInstance, cfg: AdcConfig = AdcConfig()) -> AdcLinearity:
    """DNL per code against the nominal 1 LSB step; INL against an endpoint line."""
    tl = transition_levels(cdac, cfg)
    t = tl.thresholds
    widths = t[1:] - t[:-1]  # code c = 1..126
    codes = np.arange(1, N_CODES - 1)
    finite = np.isfinite(widths)
    dnl = widths[finite] - 1.0
    kt = np.arange(1, N_CODES)
    ft = np.isfinite(t)
    tk, kk = t[ft], kt[ft]
    lsb = (tk[-1] - tk[0]) / (kk[-1] - kk[0])
    inl = (tk - (tk[0] + (kk - kk[0]) * lsb)) / lsb
    return AdcLinearity(
        codes=codes[finite],
        dnl=dnl,
        inl=inl,
        inl_codes=kk,
        dnl_rms=float(np.sqrt(np.mean(dnl**2))),
        dnl_max=float(np.max(np.abs(dnl))),
        inl_max=float(np.max(np.abs(inl))),
        dac_monotonic=tl.dac_monotonic,
        missing_codes=tl.missing_codes,
    )
