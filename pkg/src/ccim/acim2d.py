"""Analog path: per-lane 2D-weighted capacitor arrays summed in the charge domain.

Voltages are normalized to ADC LSBs, with one LSB equal to 2048 product units.
The physical chain (VREFSR charge on the array, VREFAD = 2*VREFSR on the CDAC,
the 0x40 sampled midpoint) collapses onto that normalization, so the only
quantities modelled here are the relative capacitor errors and the lane signs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .numfmt import DCIM_UNIT, MAG_BITS, N_LANES, BitPartition, LaneBatch, ProductTerm, bit_table

GAIN_MODES = ("nominal-total", "actual-total")
COMPOSITIONS = ("flat", "split-dac")


@dataclass(frozen=True)
class AnalogParams:
    """Electrical parameters of the 2D arrays.

    ``sign_gain_asymmetry`` scales the charge of negative-polarity lanes by
    ``1 + asym``; it models a mismatch between the two reference polarities
    and is zero by default. ``bridge_exp`` only matters for ``split-dac``.
    """

    vrefsr: float = 0.350
    vrefad: float = 0.700
    unit_cap: float = 48e-18
    sigma_u: float = 0.0296
    gain_error_mode: str = "actual-total"
    composition: str = "flat"
    bridge_exp: int = 6
    sign_gain_asymmetry: float = 0.0

    def __post_init__(self):
        if self.sigma_u < 0:
            raise ValueError("sigma_u must be non-negative")
        if self.gain_error_mode not in GAIN_MODES:
            raise ValueError(f"gain_error_mode must be one of {GAIN_MODES}")
        if self.composition not in COMPOSITIONS:
            raise ValueError(f"composition must be one of {COMPOSITIONS}")
        if self.vrefsr <= 0 or self.vrefad <= 0 or self.unit_cap <= 0:
            raise ValueError("reference voltages and unit capacitance must be positive")

    def lsb_volts(self) -> float:
        """Volts per ADC LSB, for reporting only."""
        return self.vrefad / 128

    def to_dict(self) -> dict:
        return asdict(self)


def unit_counts(part: BitPartition, params: AnalogParams) -> np.ndarray:
    """Number of unit capacitors realizing each ACIM cell, shape ``(7, 7)``; 0 elsewhere.

    Flat arrays build cell ``(i, j)`` from ``2**(i+j-m)`` units, ``m`` being the
    smallest ACIM exponent. In split-DAC mode cells at or above ``bridge_exp``
    sit in the main section and are built from ``2**(i+j-bridge_exp)`` units.
    """
    n = np.zeros((MAG_BITS, MAG_BITS))
    m = part.min_acim_exp
    for i, j in part.acim_set:
        e = i + j
        if params.composition == "split-dac" and e >= params.bridge_exp:
            n[i, j] = 2.0 ** (e - params.bridge_exp)
        else:
            n[i, j] = 2.0 ** (e - m)
    return n


@dataclass(eq=False)
class CapArrayInstance:
    """One output's set of 16 lane arrays with drawn relative capacitor errors.

    ``eps[p, i, j]`` is the relative error of cell ``(i, j)`` in lane ``p``; it is
    zero outside the ACIM set.
    """

    eps: np.ndarray
    partition: BitPartition = field(default_factory=BitPartition)
    params: AnalogParams = field(default_factory=AnalogParams)
    seed: object = None

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        if self.eps.shape != (N_LANES, MAG_BITS, MAG_BITS):
            raise ValueError(f"eps must have shape {(N_LANES, MAG_BITS, MAG_BITS)}")
        self.eps.setflags(write=False)

    @classmethod
    def ideal(cls, partition: BitPartition = BitPartition(), params: AnalogParams = AnalogParams()):
        return cls(np.zeros((N_LANES, MAG_BITS, MAG_BITS)), partition, params, None)

    @cached_property
    def _nominal_weights(self) -> np.ndarray:
        w = np.zeros((MAG_BITS, MAG_BITS))
        for i, j in self.partition.acim_set:
            w[i, j] = float(1 << (i + j))
        return w

    @cached_property
    def gain(self) -> float:
        """Charge-sharing gain: 1 in nominal-total mode, nominal/actual total otherwise."""
        if self.params.gain_error_mode == "nominal-total":
            return 1.0
        nominal = self._nominal_weights.sum() * N_LANES
        actual = (self._nominal_weights * (1.0 + self.eps)).sum()
        return float(nominal / actual)

    @cached_property
    def lane_tables(self) -> np.ndarray:
        """Analog charge per lane for every magnitude pair, shape ``(16, 128, 128)``."""
        bits = bit_table().astype(float)
        cell_w = self._nominal_weights * (1.0 + self.eps)
        tables = np.einsum("ai,bj,pij->pab", bits, bits, cell_w, optimize=True)
        tables.setflags(write=False)
        return tables


def sample_instance(
    params: AnalogParams, seed, partition: BitPartition = BitPartition()
) -> CapArrayInstance:
    """Draw a mismatched instance; identical ``seed`` gives an identical instance.

    Every lane draws 49 normals (plus one bridge normal) regardless of the
    partition, so changing the partition does not reshuffle the draws.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((N_LANES, MAG_BITS, MAG_BITS))
    z_bridge = rng.standard_normal(N_LANES)
    n = unit_counts(partition, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        std = np.where(n > 0, params.sigma_u / np.sqrt(np.where(n > 0, n, 1.0)), 0.0)
    eps = z * std
    if params.composition == "split-dac":
        # The bridge is a single unit; its error scales the whole attenuated section.
        low = np.zeros((MAG_BITS, MAG_BITS), dtype=bool)
        for i, j in partition.acim_set:
            low[i, j] = i + j < params.bridge_exp
        bridge = params.sigma_u * z_bridge[:, None, None]
        eps = np.where(low, (1.0 + eps) * (1.0 + bridge) - 1.0, eps)
    return CapArrayInstance(eps, partition, params, seed)


def evaluate_batch(inst: CapArrayInstance, lanes: LaneBatch) -> np.ndarray:
    """Charge-domain sum in ADC LSBs for each output in the batch."""
    lane_idx = np.arange(N_LANES)
    charge = inst.lane_tables[lane_idx, lanes.mag_in, lanes.mag_w]
    signed = charge * lanes.sign
    asym = inst.params.sign_gain_asymmetry
    if asym:
        signed = np.where(lanes.sign < 0, signed * (1.0 + asym), signed)
    return signed.sum(axis=-1) * inst.gain / DCIM_UNIT


def evaluate(inst: CapArrayInstance, terms: Sequence[ProductTerm]) -> float:
    """Scalar form of :func:`evaluate_batch` working from explicit bit matrices."""
    if len(terms) != N_LANES:
        raise ValueError(f"need {N_LANES} lane terms, got {len(terms)}")
    total = 0.0
    asym = inst.params.sign_gain_asymmetry
    for p, t in enumerate(terms):
        bits = t.bits.as_array()
        charge = float((bits * inst._nominal_weights * (1.0 + inst.eps[p])).sum())
        if t.sign < 0:
            charge = -charge * (1.0 + asym)
        total += charge
    return total * inst.gain / DCIM_UNIT


def to_volts(v_lsb, params: AnalogParams = AnalogParams()):
    return np.asarray(v_lsb) * params.lsb_volts()
