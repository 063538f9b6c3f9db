"""First-order relative cost accounting for complex-MAC architectures.

Three architectures are compared in arbitrary, consistent units:

proposed
    one shared weight array feeding both the real and imaginary datapaths
duplicated
    the complex weights stored twice so Re and Im run in parallel; the weight
    array area and power grow by ``dup_weight_factor``
sequential
    one weight array time-shared between the parts; latency grows by
    ``seq_latency_factor``

Any further differences between the baselines and the proposed design are
expressed through ``baseline_scale`` multipliers. The module computes the
accounting identities only; it does not estimate absolute silicon cost.

Config schema (JSON)::

    {
      "components": {"weight_array": {"area": a, "power": p}, "mac_logic": ...,
                     "control": ..., "adc": ...},
      "cycle_latency": {"proposed": c, "duplicated": c},   # or a single number
      "dup_weight_factor": 1.5,
      "seq_latency_factor": 2.2,
      "baseline_scale": {"duplicated": {"mac_logic": {"area": 1.0, "power": 1.0}},
                         "sequential": {...}}
    }

Keys starting with ``_`` are ignored (use them for notes).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

COMPONENTS = ("weight_array", "mac_logic", "control", "adc")
ARCHITECTURES = ("proposed", "duplicated", "sequential")
BASELINES = ("duplicated", "sequential")
METRICS = ("area", "latency", "power")
DUP_WEIGHT_FACTOR = 1.5
SEQ_LATENCY_FACTOR = 2.2


@dataclass(frozen=True)
class Cost:
    area: float = 0.0
    power: float = 0.0

    def __post_init__(self):
        if self.area < 0 or self.power < 0:
            raise ValueError("component costs must be non-negative")


@dataclass(frozen=True)
class ComponentCosts:
    weight_array: Cost = Cost()
    mac_logic: Cost = Cost()
    control: Cost = Cost()
    adc: Cost = Cost()
    cycle_latency: dict = field(default_factory=lambda: {"proposed": 1.0, "duplicated": 1.0})
    dup_weight_factor: float = DUP_WEIGHT_FACTOR
    seq_latency_factor: float = SEQ_LATENCY_FACTOR
    baseline_scale: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in COMPONENTS:
            if not isinstance(getattr(self, name), Cost):
                raise ValueError(f"{name} must be a Cost")
        lat = self.cycle_latency
        if isinstance(lat, (int, float)):
            lat = {"proposed": float(lat), "duplicated": float(lat)}
            object.__setattr__(self, "cycle_latency", lat)
        if set(lat) - {"proposed", "duplicated"} or "proposed" not in lat:
            raise ValueError("cycle_latency needs 'proposed' and optionally 'duplicated'")
        lat.setdefault("duplicated", lat["proposed"])
        if any(v < 0 for v in lat.values()):
            raise ValueError("latencies must be non-negative")
        if self.dup_weight_factor < 0 or self.seq_latency_factor < 0:
            raise ValueError("factors must be non-negative")
        for arch, comps in self.baseline_scale.items():
            if arch not in BASELINES:
                raise ValueError(f"baseline_scale architecture must be one of {BASELINES}")
            for comp, mult in comps.items():
                if comp not in COMPONENTS or set(mult) - {"area", "power"}:
                    raise ValueError(f"bad baseline_scale entry {arch}.{comp}")
                if any(v < 0 for v in mult.values()):
                    raise ValueError("baseline_scale multipliers must be non-negative")

    def component(self, name: str) -> Cost:
        return getattr(self, name)

    def scaled(self, c: float) -> "ComponentCosts":
        """All area, power and latency figures multiplied by ``c``."""
        return ComponentCosts(
            *(Cost(self.component(n).area * c, self.component(n).power * c) for n in COMPONENTS),
            cycle_latency={k: v * c for k, v in self.cycle_latency.items()},
            dup_weight_factor=self.dup_weight_factor,
            seq_latency_factor=self.seq_latency_factor,
            baseline_scale=self.baseline_scale,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentCosts":
        d = {k: v for k, v in d.items() if not k.startswith("_")}
        unknown = set(d) - {"components", "cycle_latency", "dup_weight_factor", "seq_latency_factor", "baseline_scale"}
        if unknown:
            raise ValueError(f"unknown cost config keys: {sorted(unknown)}")
        comps = {k: v for k, v in d.get("components", {}).items() if not k.startswith("_")}
        if set(comps) - set(COMPONENTS):
            raise ValueError(f"unknown components: {sorted(set(comps) - set(COMPONENTS))}")
        kw = {name: Cost(**{k: float(v) for k, v in spec.items()}) for name, spec in comps.items()}
        if "cycle_latency" in d:
            lat = d["cycle_latency"]
            kw["cycle_latency"] = float(lat) if isinstance(lat, (int, float)) else {k: float(v) for k, v in lat.items()}
        for k in ("dup_weight_factor", "seq_latency_factor"):
            if k in d:
                kw[k] = float(d[k])
        if "baseline_scale" in d:
            kw["baseline_scale"] = {
                a: {c: {m: float(x) for m, x in mult.items()} for c, mult in comps_.items()}
                for a, comps_ in d["baseline_scale"].items()
            }
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "components": {n: {"area": self.component(n).area, "power": self.component(n).power} for n in COMPONENTS},
            "cycle_latency": dict(self.cycle_latency),
            "dup_weight_factor": self.dup_weight_factor,
            "seq_latency_factor": self.seq_latency_factor,
            "baseline_scale": self.baseline_scale,
        }


def load_costs(path) -> ComponentCosts:
    try:
        return ComponentCosts.from_dict(json.loads(Path(path).read_text()))
    except (TypeError, AttributeError) as e:
        raise ValueError(f"malformed cost config: {e}") from e


def _scale(costs: ComponentCosts, arch: str, comp: str, metric: str) -> float:
    return costs.baseline_scale.get(arch, {}).get(comp, {}).get(metric, 1.0)


def evaluate_architectures(costs: ComponentCosts) -> dict:
    """``{architecture: {"area", "latency", "power"}}``."""
    table = {}
    for arch in ARCHITECTURES:
        area = power = 0.0
        for comp in COMPONENTS:
            c = costs.component(comp)
            dup = costs.dup_weight_factor if arch == "duplicated" and comp == "weight_array" else 1.0
            area += c.area * dup * _scale(costs, arch, comp, "area")
            power += c.power * dup * _scale(costs, arch, comp, "power")
        if arch == "sequential":
            latency = costs.cycle_latency["proposed"] * costs.seq_latency_factor
        else:
            latency = costs.cycle_latency[arch]
        table[arch] = {"area": area, "latency": latency, "power": power}
    return table


def reduction_report(table: dict) -> dict:
    """Per metric: ``1 - proposed / best baseline``; ``None`` when the best baseline is zero.

    Negative reductions (proposed worse than every baseline) are kept as is.
    """
    out = {}
    for metric in METRICS:
        best = min(BASELINES, key=lambda a: table[a][metric])
        base = table[best][metric]
        prop = table["proposed"][metric]
        out[metric] = {
            "proposed": prop,
            "best_baseline": best,
            "baseline_value": base,
            "reduction": None if base == 0 else 1.0 - prop / base,
        }
    return out


def table_csv(table: dict, reductions: dict | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["architecture", *METRICS])
    for arch in ARCHITECTURES:
        w.writerow([arch, *(repr(float(table[arch][m])) for m in METRICS)])
    if reductions is not None:
        w.writerow(["reduction_vs_best", *("" if reductions[m]["reduction"] is None else repr(reductions[m]["reduction"]) for m in METRICS)])
    return buf.getvalue()


# Illustrative only: a made-up breakdown showing the schema, not silicon data.
SAMPLE_CONFIG = {
    "_note": "Illustrative component breakdown in arbitrary units; not derived from any measured design.",
    "components": {
        "weight_array": {"area": 0.45, "power": 0.20},
        "mac_logic": {"area": 0.30, "power": 0.45},
        "control": {"area": 0.10, "power": 0.10},
        "adc": {"area": 0.15, "power": 0.25},
    },
    "cycle_latency": {"proposed": 1.0, "duplicated": 1.0},
    "dup_weight_factor": DUP_WEIGHT_FACTOR,
    "seq_latency_factor": SEQ_LATENCY_FACTOR,
    "baseline_scale": {
        "duplicated": {"mac_logic": {"area": 1.2, "power": 1.2}},
        "sequential": {"control": {"area": 1.5, "power": 1.5}},
    },
}
