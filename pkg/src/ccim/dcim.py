"""Digital path: per-weight-class bit counting in two time-multiplexed sign phases."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numfmt import DCIM_UNIT_EXP, BitPartition, LaneBatch, ProductTerm, bit_table


@dataclass(frozen=True)
class DcimPhaseCounts:
    """Set-bit counts per DCIM cell over the lanes active in one phase.

    ``counts`` maps each DCIM cell ``(i, j)`` to its count. The default
    partition's cells are also exposed as ``c66``, ``c65`` and ``c56``.
    """

    counts: dict

    @property
    def c66(self) -> int:
        return self.counts.get((6, 6), 0)

    @property
    def c65(self) -> int:
        return self.counts.get((6, 5), 0)

    @property
    def c56(self) -> int:
        return self.counts.get((5, 6), 0)

    def weighted(self) -> int:
        return sum(n << (i + j - DCIM_UNIT_EXP) for (i, j), n in self.counts.items())

    @classmethod
    def from_triple(cls, c66: int, c65: int, c56: int) -> "DcimPhaseCounts":
        return cls({(6, 6): c66, (6, 5): c65, (5, 6): c56})


def count_phase(terms: Sequence[ProductTerm], phase: int, part: BitPartition = BitPartition()) -> DcimPhaseCounts:
    """Count DCIM bits over lanes whose sign equals ``phase`` (+1 or -1)."""
    if phase not in (1, -1):
        raise ValueError("phase must be +1 or -1")
    counts = {cell: 0 for cell in part.dcim_cells}
    for t in terms:
        if t.sign != phase:
            continue
        for i, j in counts:
            counts[(i, j)] += t.bits.bits[i][j]
    return DcimPhaseCounts(counts)


def dcim_result(pos: DcimPhaseCounts, neg: DcimPhaseCounts) -> int:
    return pos.weighted() - neg.weighted()


def count_phase_batch(lanes: LaneBatch, phase: int, part: BitPartition) -> np.ndarray:
    """Vectorized counts, shape ``(N, n_cells)`` in ``part.dcim_cells`` order."""
    bits = bit_table()
    active = lanes.sign == phase
    out = np.empty(lanes.sign.shape[:-1] + (len(part.dcim_cells),), dtype=np.int64)
    for k, (i, j) in enumerate(part.dcim_cells):
        hit = bits[lanes.mag_in, i] & bits[lanes.mag_w, j]
        out[..., k] = np.count_nonzero(active & (hit == 1), axis=-1)
    return out


def dcim_result_batch(lanes: LaneBatch, part: BitPartition) -> np.ndarray:
    """Positive phase minus negative phase for every output in the batch."""
    weights = np.array([1 << (i + j - DCIM_UNIT_EXP) for i, j in part.dcim_cells], dtype=np.int64)
    pos = count_phase_batch(lanes, 1, part)
    neg = count_phase_batch(lanes, -1, part)
    return (pos - neg) @ weights
