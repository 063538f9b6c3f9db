"""Signed-magnitude operands, partial products and the digital/analog bit partition.

Operands are 8-bit signed-magnitude (SMF) words: bit 7 is the sign, bits 6..0
the magnitude. A product of two magnitudes is a 7x7 grid of AND terms, each
weighted ``2**(i+j)`` where ``i`` indexes the input bit and ``j`` the weight bit.
The grid is split three ways:

* the DCIM cells, counted digitally in units of ``2**11`` (one ADC LSB),
* the ACIM cells, summed as charge on the 2D capacitor array,
* truncated cells, dropped entirely.

Vectorized code passes SMF words around as raw ``uint8`` bytes so that ``-0``
survives round trips; complex vectors are arrays of shape ``(..., 8, 2)`` with
the last axis holding ``(re, im)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAG_BITS = 7
MAG_MAX = 127
VECTOR_LEN = 8
N_LANES = 16
# DCIM counts are in units of one ADC LSB.
DCIM_UNIT_EXP = 11
DCIM_UNIT = 1 << DCIM_UNIT_EXP

ALL_CELLS = frozenset((i, j) for i in range(MAG_BITS) for j in range(MAG_BITS))
DEFAULT_DCIM_CELLS = frozenset({(6, 6), (6, 5), (5, 6)})


class Smf8:
    """One signed-magnitude byte.

    Equality and hashing follow the numeric value, so ``+0 == -0``. Use
    :attr:`code` when the bit pattern matters.
    """

    __slots__ = ("sign", "mag")

    def __init__(self, sign: int, mag: int):
        if sign not in (0, 1):
            raise ValueError(f"sign bit must be 0 or 1, got {sign!r}")
        if not 0 <= mag <= MAG_MAX:
            raise ValueError(f"magnitude {mag!r} outside [0, {MAG_MAX}]")
        object.__setattr__(self, "sign", int(sign))
        object.__setattr__(self, "mag", int(mag))

    def __setattr__(self, name, value):
        raise AttributeError("Smf8 is immutable")

    @property
    def value(self) -> int:
        return -self.mag if self.sign else self.mag

    @property
    def code(self) -> int:
        return (self.sign << 7) | self.mag

    @classmethod
    def from_code(cls, code: int) -> "Smf8":
        code = int(code)
        if not 0 <= code <= 0xFF:
            raise ValueError(f"SMF code {code!r} is not a byte")
        return cls(code >> 7, code & MAG_MAX)

    def __eq__(self, other):
        if isinstance(other, Smf8):
            return self.value == other.value
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return f"Smf8(sign={self.sign}, mag={self.mag})"


@dataclass(frozen=True)
class Complex8:
    re: Smf8
    im: Smf8

    @classmethod
    def from_ints(cls, re: int, im: int) -> "Complex8":
        return cls(smf_encode(re), smf_encode(im))

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    @property
    def codes(self) -> tuple[int, int]:
        return self.re.code, self.im.code


def smf_encode(v: int, sign_of_zero: int = 0) -> Smf8:
    """Encode an integer in [-127, 127]; ``sign_of_zero`` picks between +0 and -0."""
    v = int(v)
    if not -MAG_MAX <= v <= MAG_MAX:
        raise ValueError(f"{v} does not fit in 8-bit signed magnitude")
    if v == 0:
        return Smf8(sign_of_zero, 0)
    return Smf8(1 if v < 0 else 0, abs(v))


@dataclass(frozen=True)
class PartialProductMatrix:
    """``bits[i][j]`` is input magnitude bit ``i`` AND weight magnitude bit ``j``."""

    bits: tuple[tuple[int, ...], ...]

    def weighted_sum(self, cells: Iterable[tuple[int, int]] = ALL_CELLS) -> int:
        return sum(self.bits[i][j] << (i + j) for i, j in cells)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)


@dataclass(frozen=True)
class BitPartition:
    """Assignment of the 49 partial-product cells to DCIM, ACIM or truncation.

    ACIM is the complement of the other two sets. DCIM cells must carry a
    weight of at least ``2**11`` so the digital count lands on whole ADC LSBs.
    """

    dcim_set: frozenset = DEFAULT_DCIM_CELLS
    trunc_set: frozenset = frozenset()
    acim_set: frozenset = field(init=False)

    def __post_init__(self):
        dcim = frozenset(tuple(c) for c in self.dcim_set)
        trunc = frozenset(tuple(c) for c in self.trunc_set)
        for cell in dcim | trunc:
            if cell not in ALL_CELLS:
                raise ValueError(f"cell {cell} outside the 7x7 partial-product grid")
        if dcim & trunc:
            raise ValueError(f"cells {sorted(dcim & trunc)} are both DCIM and truncated")
        low = [c for c in dcim if c[0] + c[1] < DCIM_UNIT_EXP]
        if low:
            raise ValueError(f"DCIM cells {sorted(low)} weigh less than one ADC LSB (2**11)")
        object.__setattr__(self, "dcim_set", dcim)
        object.__setattr__(self, "trunc_set", trunc)
        object.__setattr__(self, "acim_set", ALL_CELLS - dcim - trunc)

    @classmethod
    def default(cls) -> "BitPartition":
        return cls()

    @property
    def dcim_cells(self) -> list[tuple[int, int]]:
        """DCIM cells in a stable order (largest weight first)."""
        return sorted(self.dcim_set, key=lambda c: (-(c[0] + c[1]), -c[0]))

    @property
    def min_acim_exp(self) -> int:
        return min((i + j for i, j in self.acim_set), default=0)

    def to_dict(self) -> dict:
        return {
            "dcim_set": sorted(list(c) for c in self.dcim_set),
            "trunc_set": sorted(list(c) for c in self.trunc_set),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BitPartition":
        return cls(
            dcim_set=frozenset(tuple(c) for c in d.get("dcim_set", DEFAULT_DCIM_CELLS)),
            trunc_set=frozenset(tuple(c) for c in d.get("trunc_set", ())),
        )


@dataclass(frozen=True)
class ProductTerm:
    """One real product routed to a lane: ``sign * (2048*d + r)`` plus truncated bits."""

    sign: int
    d: int
    r: int
    bits: PartialProductMatrix | None = None
    trunc: int = 0

    @property
    def value(self) -> int:
        return self.sign * (DCIM_UNIT * self.d + self.r)


def partial_products(mag_in: int, mag_w: int) -> PartialProductMatrix:
    for m in (mag_in, mag_w):
        if not 0 <= m <= MAG_MAX:
            raise ValueError(f"magnitude {m} outside [0, {MAG_MAX}]")
    return PartialProductMatrix(
        tuple(
            tuple(((mag_in >> i) & 1) & ((mag_w >> j) & 1) for j in range(MAG_BITS))
            for i in range(MAG_BITS)
        )
    )


def split(ppm: PartialProductMatrix, part: BitPartition, sign_in: int, sign_w: int) -> ProductTerm:
    sign = -1 if (sign_in ^ sign_w) else 1
    d = sum(ppm.bits[i][j] << (i + j - DCIM_UNIT_EXP) for i, j in part.dcim_set)
    return ProductTerm(
        sign=sign,
        d=d,
        r=ppm.weighted_sum(part.acim_set),
        bits=ppm,
        trunc=ppm.weighted_sum(part.trunc_set),
    )


def contribution_table(part: BitPartition = BitPartition()) -> dict:
    """Fractional share of the full-scale product ``127*127`` held by each cell group.

    Returns exact :class:`~fractions.Fraction` values: ``"dcim"``, ``"acim"``,
    ``"trunc"`` and ``"weight_column"`` (one entry per weight bit ``j``).
    """
    total = sum(1 << (i + j) for i, j in ALL_CELLS)

    def frac(cells):
        return Fraction(sum(1 << (i + j) for i, j in cells), total)

    return {
        "dcim": frac(part.dcim_set),
        "acim": frac(part.acim_set),
        "trunc": frac(part.trunc_set),
        "weight_column": [frac((i, j) for i in range(MAG_BITS) if (i, j) in ALL_CELLS) for j in range(MAG_BITS)],
        "total": total,
    }


def _lane_pairs(x: Sequence[Complex8], w: Sequence[Complex8]):
    """(input, weight, extra inversion) for the 16 lanes of each output."""
    re = [(xk.re, wk.re, 0) for xk, wk in zip(x, w)] + [(xk.im, wk.im, 1) for xk, wk in zip(x, w)]
    im = [(xk.re, wk.im, 0) for xk, wk in zip(x, w)] + [(xk.im, wk.re, 0) for xk, wk in zip(x, w)]
    return re, im


def complex_expand(
    x: Sequence[Complex8], w: Sequence[Complex8], part: BitPartition = BitPartition()
) -> tuple[list[ProductTerm], list[ProductTerm]]:
    """Expand an 8-element complex dot product into 16 real lanes per output.

    Real output lanes are ``Re x * Re w`` followed by ``Im x * Im w`` with an
    extra sign inversion; imaginary output lanes are ``Re x * Im w`` followed by
    ``Im x * Re w``.
    """
    if len(x) != VECTOR_LEN or len(w) != VECTOR_LEN:
        raise ValueError(f"complex_expand needs two length-{VECTOR_LEN} vectors, got {len(x)} and {len(w)}")
    out = []
    for pairs in _lane_pairs(x, w):
        out.append(
            [split(partial_products(a.mag, b.mag), part, a.sign ^ flip, b.sign) for a, b, flip in pairs]
        )
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Vectorized forms


def smf_split(codes) -> tuple[np.ndarray, np.ndarray]:
    """Sign bits and magnitudes of an array of SMF bytes."""
    codes = np.asarray(codes, dtype=np.uint8)
    return (codes >> 7).astype(np.int8), (codes & MAG_MAX).astype(np.uint8)


def smf_encode_array(values, sign_of_zero: int = 0) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if np.any(np.abs(values) > MAG_MAX):
        raise ValueError("values outside [-127, 127]")
    sign = np.where(values == 0, sign_of_zero, values < 0).astype(np.uint8)
    return (sign << 7 | np.abs(values).astype(np.uint8)).astype(np.uint8)


def smf_values(codes) -> np.ndarray:
    sign, mag = smf_split(codes)
    return np.where(sign == 1, -mag.astype(np.int64), mag.astype(np.int64))


def complex_to_codes(vec: Sequence[Complex8]) -> np.ndarray:
    return np.array([c.codes for c in vec], dtype=np.uint8)


def codes_to_complex(codes) -> list[Complex8]:
    codes = np.asarray(codes, dtype=np.uint8)
    return [Complex8(Smf8.from_code(re), Smf8.from_code(im)) for re, im in codes]


@dataclass(frozen=True)
class LaneBatch:
    """Per-lane operands for a batch of outputs, each array of shape ``(N, 16)``."""

    sign: np.ndarray  # +1 / -1, int8
    mag_in: np.ndarray  # uint8
    mag_w: np.ndarray  # uint8

    def negated(self) -> "LaneBatch":
        return LaneBatch(-self.sign, self.mag_in, self.mag_w)


def expand_lanes(x_codes, w_codes) -> tuple[LaneBatch, LaneBatch]:
    """Vectorized :func:`complex_expand` over arrays of shape ``(N, 8, 2)``."""
    x_codes = np.asarray(x_codes, dtype=np.uint8)
    w_codes = np.asarray(w_codes, dtype=np.uint8)
    if x_codes.shape[-2:] != (VECTOR_LEN, 2) or w_codes.shape[-2:] != (VECTOR_LEN, 2):
        raise ValueError(f"expected (..., {VECTOR_LEN}, 2) SMF arrays, got {x_codes.shape} and {w_codes.shape}")
    xs, xm = smf_split(x_codes)
    ws, wm = smf_split(w_codes)
    re_sign = np.concatenate([xs[..., 0] ^ ws[..., 0], xs[..., 1] ^ ws[..., 1] ^ 1], axis=-1)
    im_sign = np.concatenate([xs[..., 0] ^ ws[..., 1], xs[..., 1] ^ ws[..., 0]], axis=-1)
    re = LaneBatch(
        (1 - 2 * re_sign).astype(np.int8),
        np.concatenate([xm[..., 0], xm[..., 1]], axis=-1),
        np.concatenate([wm[..., 0], wm[..., 1]], axis=-1),
    )
    im = LaneBatch(
        (1 - 2 * im_sign).astype(np.int8),
        np.concatenate([xm[..., 0], xm[..., 1]], axis=-1),
        np.concatenate([wm[..., 1], wm[..., 0]], axis=-1),
    )
    return re, im


def bit_table() -> np.ndarray:
    """``(128, 7)`` array of magnitude bits, LSB first."""
    return ((np.arange(MAG_MAX + 1)[:, None] >> np.arange(MAG_BITS)) & 1).astype(np.uint8)


@lru_cache(maxsize=32)
def term_tables(part: BitPartition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(d, r, trunc)`` lookup tables of shape ``(128, 128)`` indexed by magnitudes."""
    bits = bit_table().astype(np.int64)
    d = np.zeros((128, 128), dtype=np.int64)
    r = np.zeros_like(d)
    t = np.zeros_like(d)
    for i, j in ALL_CELLS:
        pp = np.outer(bits[:, i], bits[:, j])
        if (i, j) in part.dcim_set:
            d += pp << (i + j - DCIM_UNIT_EXP)
        elif (i, j) in part.trunc_set:
            t += pp << (i + j)
        else:
            r += pp << (i + j)
    for a in (d, r, t):
        a.setflags(write=False)
    return d, r, t
