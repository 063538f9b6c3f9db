import numpy as np
import pytest

from ccim.dcim import DcimPhaseCounts, count_phase, dcim_result, dcim_result_batch
from ccim.numfmt import BitPartition, LaneBatch, ProductTerm, partial_products, split, term_tables

PART = BitPartition()


def lane_terms(spec):
    """``spec`` is a list of (mag_in, mag_w, sign) per lane."""
    return [split(partial_products(a, b), PART, 0 if s > 0 else 1, 0) for a, b, s in spec]


def test_all_max_positive():
    terms = lane_terms([(127, 127, 1)] * 16)
    pos = count_phase(terms, 1)
    assert (pos.c66, pos.c65, pos.c56) == (16, 16, 16)
    neg = count_phase(terms, -1)
    assert (neg.c66, neg.c65, neg.c56) == (0, 0, 0)


def test_split_signs_64():
    terms = lane_terms([(64, 64, 1)] * 8 + [(64, 64, -1)] * 8)
    pos = count_phase(terms, 1)
    assert (pos.c66, pos.c65, pos.c56) == (8, 0, 0)
    assert dcim_result(pos, count_phase(terms, -1)) == 0


def test_endpoints():
    full = DcimPhaseCounts.from_triple(16, 16, 16)
    empty = DcimPhaseCounts.from_triple(0, 0, 0)
    half = DcimPhaseCounts.from_triple(8, 8, 8)
    assert dcim_result(full, empty) == 64
    assert dcim_result(empty, full) == -64
    assert dcim_result(half, half) == 0


def test_bad_phase():
    with pytest.raises(ValueError):
        count_phase(lane_terms([(1, 1, 1)] * 16), 0)


def random_lanes(rng, n):
    return LaneBatch(
        rng.choice(np.array([-1, 1], dtype=np.int8), size=(n, 16)),
        rng.integers(0, 128, size=(n, 16)).astype(np.uint8),
        rng.integers(0, 128, size=(n, 16)).astype(np.uint8),
    )


def test_batch_equals_signed_d_sum(rng):
    lanes = random_lanes(rng, 100_000)
    d, _, _ = term_tables(PART)
    expect = (lanes.sign * d[lanes.mag_in, lanes.mag_w]).sum(axis=1)
    got = dcim_result_batch(lanes, PART)
    assert np.array_equal(got, expect)
    assert got.min() >= -64 and got.max() <= 64


def test_negation_swaps_phases(rng):
    lanes = random_lanes(rng, 2000)
    assert np.array_equal(dcim_result_batch(lanes.negated(), PART), -dcim_result_batch(lanes, PART))


def test_scalar_matches_batch(rng):
    lanes = random_lanes(rng, 50)
    batch = dcim_result_batch(lanes, PART)
    for n in range(50):
        spec = list(zip(lanes.mag_in[n].tolist(), lanes.mag_w[n].tolist(), lanes.sign[n].tolist()))
        terms = lane_terms(spec)
        assert dcim_result(count_phase(terms, 1), count_phase(terms, -1)) == batch[n]


def test_empty_dcim_partition(rng):
    part = BitPartition(dcim_set=frozenset())
    assert not dcim_result_batch(random_lanes(rng, 10), part).any()
