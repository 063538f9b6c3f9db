"""Quick oracle-equivalence checks for a fresh install (run by ``ccim selftest``)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import costmodel, saradc
from .cmacro import Macro, MacroConfig, full_precision_reference, oracle_reference
from .numfmt import (
    DCIM_UNIT,
    BitPartition,
    codes_to_complex,
    complex_expand,
    contribution_table,
    expand_lanes,
    smf_encode_array,
    smf_values,
)
from .dcim import dcim_result_batch


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _random(rng, n):
    return rng.integers(0, 256, size=(n, 8, 2), dtype=np.uint8)


def check_oracle(n: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    x, w = _random(rng, n), _random(rng, n)
    macro = Macro(MacroConfig())
    re, im = macro.mac_batch(x, w, np.arange(n) % 8)
    ore, oim = oracle_reference(x, w)
    fre, fim = full_precision_reference(x, w)
    same = np.array_equal(re, ore) and np.array_equal(im, oim)
    worst = int(max(np.max(np.abs(re * DCIM_UNIT - fre)), np.max(np.abs(im * DCIM_UNIT - fim))))
    return Check("oracle_equivalence", same and worst <= 1024, f"{n} vectors, max |error| {worst} (bound 1024)")


def check_expand(n: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(n):
        x, w = _random(rng, 1)[0], _random(rng, 1)[0]
        terms_re, terms_im = complex_expand(codes_to_complex(x), codes_to_complex(w))
        xv, wv = smf_values(x), smf_values(w)
        z = np.sum((xv[:, 0] + 1j * xv[:, 1]) * (wv[:, 0] + 1j * wv[:, 1]))
        ok &= sum(t.value for t in terms_re) == int(z.real) and sum(t.value for t in terms_im) == int(z.imag)
    return Check("complex_expand", bool(ok), f"{n} vectors against direct complex multiply")


def check_dcim_endpoints() -> Check:
    full = smf_encode_array(np.full((1, 8, 2), 127))
    pos_w = full.copy()
    pos_w[..., 1] = smf_encode_array(np.full((1, 8), -127))  # conj keeps every Re lane positive
    re_lanes, _ = expand_lanes(full, pos_w)
    hi = int(dcim_result_batch(re_lanes, BitPartition())[0])
    lo = int(dcim_result_batch(re_lanes.negated(), BitPartition())[0])
    return Check("dcim_endpoints", (hi, lo) == (64, -64), f"got {hi} and {lo}")


def check_contribution() -> Check:
    frac = contribution_table()["dcim"]
    return Check("contribution", frac == Fraction(8192, 16129), f"dcim share {frac}")


def check_adc_ideal() -> Check:
    lin = saradc.dnl_inl(saradc.CdacInstance.ideal())
    worst = max(lin.dnl_max, lin.inl_max)
    return Check("adc_ideal_linearity", worst < 1e-9, f"max |DNL|,|INL| {worst:.3g}")


def check_symmetry(seeds: int, n: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    ok = True
    for s in range(seeds):
        macro = Macro(MacroConfig.mismatch(seed + s))
        x, w = _random(rng, n), _random(rng, n)
        re, im = macro.mac_batch(x, w, np.arange(n) % 8)
        nre, nim = macro.mac_batch(x ^ 0x80, w, np.arange(n) % 8)
        ok &= np.array_equal(nre, -re) and np.array_equal(nim, -im)
    return Check("negation_symmetry", bool(ok), f"{seeds} mismatch instances x {n} inputs")


def check_cost() -> Check:
    t = costmodel.evaluate_architectures(costmodel.ComponentCosts(weight_array=costmodel.Cost(1.0, 1.0)))
    area = t["duplicated"]["area"] / t["proposed"]["area"]
    lat = t["sequential"]["latency"] / t["proposed"]["latency"]
    return Check("cost_identities", area == 1.5 and abs(lat - 2.2) < 1e-15, f"area x{area}, latency x{lat}")


def run(seed: int = 0, n: int = 20000) -> list[Check]:
    return [
        check_oracle(n, seed),
        check_expand(200, seed),
        check_dcim_endpoints(),
        check_contribution(),
        check_adc_ideal(),
        check_symmetry(4, 500, seed),
        check_cost(),
    ]
