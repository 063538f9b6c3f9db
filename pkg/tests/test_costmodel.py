import json
from pathlib import Path

import pytest

from ccim.costmodel import (
    ComponentCosts,
    Cost,
    SAMPLE_CONFIG,
    evaluate_architectures,
    load_costs,
    reduction_report,
    table_csv,
)

REPO = Path(__file__).resolve().parents[1]


def weight_only():
    return ComponentCosts(weight_array=Cost(1.0, 1.0))


def test_weight_dominated_area_ratio():
    t = evaluate_architectures(weight_only())
    assert t["duplicated"]["area"] / t["proposed"]["area"] == 1.5


def test_sequential_latency_ratio():
    for lat in (1.0, 3.0, 7.25):
        t = evaluate_architectures(ComponentCosts(weight_array=Cost(1, 1), cycle_latency=lat))
        assert t["sequential"]["latency"] == pytest.approx(2.2 * t["proposed"]["latency"], rel=1e-15)


def test_all_zero():
    t = evaluate_architectures(ComponentCosts(cycle_latency=0.0))
    assert all(v == 0 for row in t.values() for v in row.values())
    rep = reduction_report(t)
    assert all(rep[m]["reduction"] is None for m in rep)


def _table(prop, base):
    row = lambda v: {"area": v, "latency": v, "power": v}
    return {"proposed": row(prop), "duplicated": row(base), "sequential": row(base * 2)}


def test_reduction_identity():
    rep = reduction_report(_table(0.65, 1.0))
    assert rep["area"]["reduction"] == pytest.approx(0.35, abs=1e-15)
    assert rep["area"]["best_baseline"] == "duplicated"


def test_reduction_zero_and_negative():
    assert reduction_report(_table(1.0, 1.0))["power"]["reduction"] == 0.0
    assert reduction_report(_table(1.5, 1.0))["latency"]["reduction"] == pytest.approx(-0.5)


def test_best_baseline_is_per_metric():
    t = evaluate_architectures(ComponentCosts.from_dict(SAMPLE_CONFIG))
    rep = reduction_report(t)
    assert rep["latency"]["best_baseline"] == "duplicated"
    assert rep["area"]["best_baseline"] == "sequential"


def test_scale_invariance():
    c = ComponentCosts.from_dict(SAMPLE_CONFIG)
    a = reduction_report(evaluate_architectures(c))
    b = reduction_report(evaluate_architectures(c.scaled(3.7)))
    for m in a:
        assert b[m]["reduction"] == pytest.approx(a[m]["reduction"], rel=1e-12)


def test_negative_costs_rejected():
    with pytest.raises(ValueError):
        Cost(-1.0, 0.0)
    with pytest.raises(ValueError):
        ComponentCosts(cycle_latency=-1.0)


def test_config_round_trip(tmp_path):
    c = ComponentCosts.from_dict(SAMPLE_CONFIG)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(c.to_dict()))
    assert evaluate_architectures(load_costs(p)) == evaluate_architectures(c)


def test_unknown_keys_rejected():
    with pytest.raises(ValueError):
        ComponentCosts.from_dict({"components": {"sram": {"area": 1}}})
    with pytest.raises(ValueError):
        ComponentCosts.from_dict({"latency": 1})
    with pytest.raises(ValueError):
        ComponentCosts.from_dict({"baseline_scale": {"proposed": {}}})


def test_shipped_sample_matches_module():
    shipped = json.loads((REPO / "configs" / "cost_sample.json").read_text())
    assert shipped == SAMPLE_CONFIG
    assert "illustrative" in shipped["_note"].lower()


def test_csv_layout():
    t = evaluate_architectures(weight_only())
    lines = table_csv(t, reduction_report(t)).splitlines()
    assert lines[0] == "architecture,area,latency,power"
    assert [l.split(",")[0] for l in lines[1:]] == ["proposed", "duplicated", "sequential", "reduction_vs_best"]
