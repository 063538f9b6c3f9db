"""Macro integration: weight memory, eight complex units, the post-digital combiner.

Each unit holds 64 rows of eight complex SMF weights. One execute applies the
shared 8-element complex input to the selected row of every unit; each unit
returns a real and an imaginary 8-bit code equal to::

    clamp(dcim + (adc_code - 0x40), -128, 127)

One LSB of the final code is ``2**11`` product units. The exact-integer
oracles at the bottom of this module share no code with the execute path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
import numpy as np

from . import acim2d, saradc
from .acim2d import AnalogParams, CapArrayInstance
from .dcim import dcim_result_batch
from .numfmt import (
    DCIM_UNIT,
    DCIM_UNIT_EXP,
    VECTOR_LEN,
    BitPartition,
    Complex8,
    codes_to_complex,
    complex_to_codes,
    expand_lanes,
    smf_split,
)
from .saradc import AdcConfig, CdacInstance

N_UNITS = 8
N_ROWS = 64
ROW_BYTES = 2 * VECTOR_LEN
OUT_MIN, OUT_MAX = -128, 127
FULL_SCALE = 2 * VECTOR_LEN * 127 * 127  # 258064
MODES = ("ideal", "mismatch")


def _as_codes(vec) -> np.ndarray:
    if len(vec) and isinstance(vec[0], Complex8):
        return complex_to_codes(vec)
    arr = np.asarray(vec)
    if arr.shape[-2:] != (VECTOR_LEN, 2):
        raise ValueError(f"expected {VECTOR_LEN} complex SMF words, got shape {arr.shape}")
    return arr.astype(np.uint8)


class WeightMemory:
    """64kb weight store: ``units x rows x elements x (re, im)`` SMF bytes.

    The image byte order used by :meth:`to_bytes` is row-major with the unit
    index outermost (image row ``unit*64 + row``); each 16-byte row lists the
    eight elements in order, real byte before imaginary byte.
    """

    capacity_bits = N_UNITS * N_ROWS * ROW_BYTES * 8

    def __init__(self, data: np.ndarray | None = None):
        if data is None:
            data = np.zeros((N_UNITS, N_ROWS, VECTOR_LEN, 2), dtype=np.uint8)
        data = np.asarray(data, dtype=np.uint8)
        if data.shape != (N_UNITS, N_ROWS, VECTOR_LEN, 2):
            raise ValueError(f"weight memory shape must be {(N_UNITS, N_ROWS, VECTOR_LEN, 2)}")
        self.data = data.copy()

    @staticmethod
    def _check(unit, row):
        if not 0 <= unit < N_UNITS:
            raise IndexError(f"unit {unit} out of range [0, {N_UNITS - 1}]")
        if not 0 <= row < N_ROWS:
            raise IndexError(f"row {row} out of range [0, {N_ROWS - 1}]")

    def write_weights(self, unit: int, row: int, values) -> None:
        self._check(unit, row)
        self.data[unit, row] = _as_codes(values)

    def read_weights(self, unit: int, row: int) -> list[Complex8]:
        self._check(unit, row)
        return codes_to_complex(self.data[unit, row])

    def to_bytes(self) -> bytes:
        return self.data.tobytes(order="C")

    @classmethod
    def from_bytes(cls, blob: bytes) -> "WeightMemory":
        if len(blob) != N_UNITS * N_ROWS * ROW_BYTES:
            raise ValueError(f"weight image must be {N_UNITS * N_ROWS * ROW_BYTES} bytes, got {len(blob)}")
        return cls(np.frombuffer(blob, dtype=np.uint8).reshape(N_UNITS, N_ROWS, VECTOR_LEN, 2))

    def to_hex(self) -> str:
        rows = self.data.reshape(N_UNITS * N_ROWS, ROW_BYTES)
        return "".join(bytes(r).hex() + "\n" for r in rows)

    @classmethod
    def from_hex(cls, text: str) -> "WeightMemory":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if len(lines) != N_UNITS * N_ROWS:
            raise ValueError(f"hex image must have {N_UNITS * N_ROWS} rows, got {len(lines)}")
        try:
            blob = b"".join(bytes.fromhex(ln) for ln in lines)
        except ValueError as exc:
            raise ValueError(f"malformed hex weight image: {exc}") from None
        return cls.from_bytes(blob)

    def save(self, path, fmt: str | None = None) -> None:
        path = Path(path)
        fmt = fmt or ("hex" if path.suffix in (".hex", ".txt") else "bin")
        payload = self.to_hex().encode() if fmt == "hex" else self.to_bytes()
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "WeightMemory":
        """Read a binary image (8192 bytes) or a hex text image (512 lines)."""
        blob = Path(path).read_bytes()
        if len(blob) == N_UNITS * N_ROWS * ROW_BYTES:
            return cls.from_bytes(blob)
        return cls.from_hex(blob.decode("ascii"))


@dataclass(frozen=True)
class MacroConfig:
    """Macro parameterization.

    ``cdac_sigma_u`` defaults to the array's ``sigma_u`` (both are built from the
    same unit capacitor). In ``ideal`` mode all mismatch is ignored.
    """

    partition: BitPartition = field(default_factory=BitPartition)
    analog: AnalogParams = field(default_factory=AnalogParams)
    adc: AdcConfig = field(default_factory=AdcConfig)
    mode: str = "ideal"
    seed: int = 0
    cdac_sigma_u: float | None = None
    cdac_lsb_units: int = 16
    shared_row_select: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @classmethod
    def mismatch(cls, seed: int, sigma_u: float = 0.0296, **kw) -> "MacroConfig":
        analog = replace(kw.pop("analog", AnalogParams()), sigma_u=sigma_u)
        return cls(analog=analog, mode="mismatch", seed=seed, **kw)

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "analog": self.analog.to_dict(),
            "adc": self.adc.to_dict(),
            "mode": self.mode,
            "seed": self.seed,
            "cdac_sigma_u": self.cdac_sigma_u,
            "cdac_lsb_units": self.cdac_lsb_units,
            "shared_row_select": self.shared_row_select,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MacroConfig":
        known = {"partition", "analog", "adc", "mode", "seed", "cdac_sigma_u", "cdac_lsb_units", "shared_row_select"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown macro config keys: {sorted(unknown)}")
        return cls(
            partition=BitPartition.from_dict(d.get("partition", {})),
            analog=AnalogParams(**d.get("analog", {})),
            adc=AdcConfig(**d.get("adc", {})),
            mode=d.get("mode", "ideal"),
            seed=int(d.get("seed", 0)),
            cdac_sigma_u=d.get("cdac_sigma_u"),
            cdac_lsb_units=int(d.get("cdac_lsb_units", 16)),
            shared_row_select=bool(d.get("shared_row_select", False)),
        )


@dataclass
class MacroOutput:
    re_codes: np.ndarray
    im_codes: np.ndarray
    saturated: np.ndarray

    def as_complex(self) -> np.ndarray:
        return self.re_codes + 1j * self.im_codes


def _child_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=key)


class Macro:
    """A configured macro instance. Mismatch draws are fixed at construction.

    Executes only read the instance, so they may run concurrently; weight
    writes need exclusive access.
    """

    def __init__(self, config: MacroConfig = MacroConfig(), memory: WeightMemory | None = None):
        self.config = config
        self.memory = memory if memory is not None else WeightMemory()
        part, analog = config.partition, config.analog
        cdac_sigma = analog.sigma_u if config.cdac_sigma_u is None else config.cdac_sigma_u
        self.arrays: list[list[CapArrayInstance]] = []
        self.cdacs: list[list[CdacInstance]] = []
        for u in range(N_UNITS):
            arr_u, cdac_u = [], []
            for o in range(2):
                if config.mode == "ideal":
                    arr_u.append(CapArrayInstance.ideal(part, analog))
                    cdac_u.append(CdacInstance.ideal())
                else:
                    arr_u.append(acim2d.sample_instance(analog, _child_seed(config.seed, u, o, 0), part))
                    cdac_u.append(
                        saradc.sample_cdac(cdac_sigma, _child_seed(config.seed, u, o, 1), config.cdac_lsb_units)
                    )
            self.arrays.append(arr_u)
            self.cdacs.append(cdac_u)

    def mac_batch(self, x_codes, w_codes, units, rng: np.random.Generator | None = None, detail: bool = False):
        """Evaluate one complex dot product per row of ``x_codes``/``w_codes``.

        ``units`` picks which unit's analog instances serve each row. Returns
        ``(re_codes, im_codes)``, or a dict with the DCIM and ADC parts when
        ``detail`` is set.
        """
        x_codes = np.asarray(x_codes, dtype=np.uint8)
        w_codes = np.asarray(w_codes, dtype=np.uint8)
        units = np.broadcast_to(np.asarray(units, dtype=np.int64), x_codes.shape[:1])
        part, adc_cfg = self.config.partition, self.config.adc
        out = {}
        for name, o, lanes in zip(("re", "im"), (0, 1), expand_lanes(x_codes, w_codes)):
            dcim = dcim_result_batch(lanes, part)
            v = np.zeros(len(x_codes))
            adc = np.zeros(len(x_codes), dtype=np.int64)
            for u in np.unique(units):
                sel = np.nonzero(units == u)[0]
                sub = type(lanes)(lanes.sign[sel], lanes.mag_in[sel], lanes.mag_w[sel])
                v[sel] = acim2d.evaluate_batch(self.arrays[u][o], sub)
                adc[sel] = saradc.convert(self.cdacs[u][o], adc_cfg, v[sel], rng)
            total = dcim + adc - adc_cfg.offset_code
            out[name] = np.clip(total, OUT_MIN, OUT_MAX)
            out[name + "_dcim"], out[name + "_adc"], out[name + "_v"] = dcim, adc, v
            lo, hi = saradc.end_codes(adc_cfg)
            out[name + "_saturated"] = (total != out[name]) | (adc <= lo) | (adc >= hi)
        return out if detail else (out["re"], out["im"])

    def _rows(self, row_select) -> np.ndarray:
        rows = np.asarray(row_select, dtype=np.int64)
        if rows.ndim == 0:
            rows = np.full(N_UNITS, rows)
        if rows.shape[-1] != N_UNITS:
            raise ValueError(f"need one row select per unit ({N_UNITS}) or a single shared row")
        if self.config.shared_row_select and np.any(rows != rows[..., :1]):
            raise ValueError("shared_row_select is set but row selects differ between units")
        if np.any((rows < 0) | (rows >= N_ROWS)):
            raise IndexError("row select out of range [0, 63]")
        return rows

    def execute_batch(self, inputs, row_select, rng: np.random.Generator | None = None):
        """Vectorized execute: ``inputs`` is ``(N, 8, 2)``, ``row_select`` ``(N, 8)`` or ``(N,)``.

        Returns ``(re, im)`` code arrays of shape ``(N, 8)``, one column per unit.
        """
        inputs = np.asarray(inputs, dtype=np.uint8)
        n = len(inputs)
        rows = np.asarray(row_select, dtype=np.int64)
        if rows.ndim == 1:
            rows = np.repeat(rows[:, None], N_UNITS, axis=1)
        rows = self._rows(rows)
        unit_idx = np.broadcast_to(np.arange(N_UNITS), (n, N_UNITS))
        w = self.memory.data[unit_idx, rows]  # (N, 8 units, 8, 2)
        x = np.repeat(inputs[:, None], N_UNITS, axis=1)
        re, im = self.mac_batch(x.reshape(-1, VECTOR_LEN, 2), w.reshape(-1, VECTOR_LEN, 2), unit_idx.reshape(-1), rng)
        return re.reshape(n, N_UNITS), im.reshape(n, N_UNITS)

    def execute(self, inputs, row_select, rng: np.random.Generator | None = None) -> MacroOutput:
        x = _as_codes(inputs)
        rows = self._rows(row_select)
        w = self.memory.data[np.arange(N_UNITS), rows]
        d = self.mac_batch(np.repeat(x[None], N_UNITS, axis=0), w, np.arange(N_UNITS), rng, detail=True)
        return MacroOutput(d["re"], d["im"], d["re_saturated"] | d["im_saturated"])


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class PhaseState:
    """Inputs latched at the start of the current sampling phase."""

    latched_input: np.ndarray | None = None
    latched_rows: np.ndarray | None = None

    @property
    def valid(self) -> bool:
        return self.latched_input is not None


def step_pipeline(macro: Macro, state: PhaseState, new_input, new_rows, rng=None):
    """Advance one sampling phase.

    The previously latched input is converted during this phase and its result
    appears now; the new input is latched for the next step. Returns
    ``(next_state, output)`` with ``output`` None on the first step.
    """
    out = macro.execute(state.latched_input, state.latched_rows, rng) if state.valid else None
    nxt = PhaseState(_as_codes(new_input).copy(), macro._rows(new_rows).copy())
    return nxt, out


# ---------------------------------------------------------------------------
# Exact-integer references


def _smf_ints(codes):
    sign, mag = smf_split(codes)
    return sign.astype(np.int64), mag.astype(np.int64)


def full_precision_reference(inputs, weights):
    """Exact complex MAC ``sum(x_k * w_k)`` as integer ``(re, im)``.

    Accepts Complex8 sequences or SMF code arrays with leading batch axes.
    """
    xs, xm = _smf_ints(_as_codes(inputs))
    ws, wm = _smf_ints(_as_codes(weights))
    xv = np.where(xs == 1, -xm, xm)
    wv = np.where(ws == 1, -wm, wm)
    a, b = xv[..., 0], xv[..., 1]
    c, d = wv[..., 0], wv[..., 1]
    re = (a * c - b * d).sum(axis=-1)
    im = (a * d + b * c).sum(axis=-1)
    if re.ndim == 0:
        return int(re), int(im)
    return re, im


def round_half_away(num, den: int):
    """Integer ``round(num/den)`` with ties away from zero, for integer ``num``."""
    num = np.asarray(num, dtype=np.int64)
    q = (np.abs(num) + den // 2) // den
    return np.where(num < 0, -q, q)


def _split_exact(mag_a, mag_b, part: BitPartition):
    """DCIM count and ACIM residual of ``mag_a * mag_b`` by direct bit arithmetic."""
    d = np.zeros(np.broadcast(mag_a, mag_b).shape, dtype=np.int64)
    t = np.zeros_like(d)
    for i, j in part.dcim_set:
        d += (((mag_a >> i) & 1) * ((mag_b >> j) & 1)) << (i + j - DCIM_UNIT_EXP)
    for i, j in part.trunc_set:
        t += (((mag_a >> i) & 1) * ((mag_b >> j) & 1)) << (i + j)
    r = mag_a * mag_b - DCIM_UNIT * d - t
    return d, r


def oracle_reference(inputs, weights, partition: BitPartition = BitPartition()):
    """Ideal macro output from exact integers: ``clamp(dcim + round(sum(sign*r)/2048))``."""
    xs, xm = _smf_ints(_as_codes(inputs))
    ws, wm = _smf_ints(_as_codes(weights))

    def signed_parts(ia, ib, flip):
        sign = 1 - 2 * (xs[..., ia] ^ ws[..., ib] ^ flip)
        d, r = _split_exact(xm[..., ia], wm[..., ib], partition)
        return (sign * d).sum(axis=-1), (sign * r).sum(axis=-1)

    codes = []
    for pairs in (((0, 0, 0), (1, 1, 1)), ((0, 1, 0), (1, 0, 0))):
        d_tot = 0
        r_tot = 0
        for ia, ib, flip in pairs:
            d_part, r_part = signed_parts(ia, ib, flip)
            d_tot = d_tot + d_part
            r_tot = r_tot + r_part
        code = np.clip(d_tot + round_half_away(r_tot, DCIM_UNIT), OUT_MIN, OUT_MAX)
        codes.append(int(code) if np.ndim(code) == 0 else code)
    return tuple(codes)
