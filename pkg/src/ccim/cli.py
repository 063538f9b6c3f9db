"""Command-line experiment runner.

Precedence: built-in defaults, then the ``--config`` JSON file, then flags.
Primary output goes to ``--out`` (or stdout). In CSV format a JSON summary
with the echoed configuration is written next to it as ``<out>.summary.json``.
Timestamps appear only in the log line on stderr.

Exit codes: 0 success, 1 malformed config or flags, 2 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import costmodel, doaapp, metrology, selftest
from .cmacro import MacroConfig

log = logging.getLogger("ccim")

CONFIG_SECTIONS = ("macro", "experiment", "doa", "cost")
EXPERIMENT_KEYS = {
    "seed",
    "trials",
    "sigma_u",
    "sigma_list",
    "seeds",
    "lsb_units",
    "repeats",
    "unit",
    "mode",
    "random_angle",
}
DEFAULT_FORMAT = {
    "xfer": "csv",
    "rms": "json",
    "mc-mismatch": "csv",
    "adc-char": "json",
    "doa": "csv",
    "cost": "json",
    "selftest": "json",
}
DEFAULTS = {
    "xfer": {"seed": 0, "repeats": 1, "unit": 0, "seeds": 0},
    "rms": {"seed": 0, "trials": 100_000},
    "mc-mismatch": {"seed": 0, "trials": 20_000, "seeds": 20, "sigma_list": [0.0, 0.0148, 0.0296, 0.0592]},
    "adc-char": {"seed": 0, "seeds": 1000, "sigma_u": 0.0296, "lsb_units": 16},
    "doa": {"seed": 0, "trials": 100, "random_angle": None},
    "cost": {},
    "selftest": {"seed": 0, "trials": 20_000},
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}") from e
    if not vals:
        raise argparse.ArgumentTypeError("sigma list is empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccim", description="Complex-valued hybrid CIM macro simulator and experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path, help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        return sp

    sp = common(sub.add_parser("xfer", help="transfer sweep and INL"))
    sp.add_argument("--sigma-u", type=float)
    sp.add_argument("--mode", choices=("ideal", "mismatch"))
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--unit", type=int)
    sp.add_argument("--seeds", type=int, help="mismatch seeds for the zero-crossing INL report")

    sp = common(sub.add_parser("rms", help="uniform-input RMS error"))
    sp.add_argument("--trials", type=int)
    sp.add_argument("--sigma-u", type=float)
    sp.add_argument("--mode", choices=("ideal", "mismatch"))

    sp = common(sub.add_parser("mc-mismatch", help="RMS error versus capacitor mismatch"))
    sp.add_argument("--trials", type=int, help="trials per seed")
    sp.add_argument("--sigma-list", type=_float_list)
    sp.add_argument("--seeds", type=int, help="mismatch instances per sigma")

    sp = common(sub.add_parser("adc-char", help="SAR ADC DNL/INL statistics"))
    sp.add_argument("--sigma-u", type=float)
    sp.add_argument("--seeds", type=int)
    sp.add_argument("--lsb-units", type=int)

    sp = common(sub.add_parser("doa", help="beamscan DOA, macro versus float"))
    sp.add_argument("--trials", type=int)
    sp.add_argument("--sigma-u", type=float)
    sp.add_argument("--mode", choices=("ideal", "mismatch"))
    sp.add_argument("--snr-db", type=float)
    sp.add_argument("--angle", type=float)
    sp.add_argument("--random-angle", choices=("grid", "uniform"))

    sp = common(sub.add_parser("cost", help="relative area/latency/power table"))
    sp.add_argument("--sample", action="store_true", help="print the illustrative sample cost config and exit")

    sp = common(sub.add_parser("selftest", help="oracle-equivalence checks"))
    sp.add_argument("--trials", type=int, help="random vectors for the oracle check")
    return p


# ---------------------------------------------------------------------------
# Config


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(CONFIG_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    exp = data.get("experiment", {})
    if not isinstance(exp, dict) or set(exp) - EXPERIMENT_KEYS:
        raise ConfigError(f"unknown experiment keys: {sorted(set(exp) - EXPERIMENT_KEYS)}")
    return data


def _experiment(args, cfg: dict) -> dict:
    exp = dict(DEFAULTS[args.command])
    exp.update(cfg.get("experiment", {}))
    for key in EXPERIMENT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            exp[key] = val
    return exp


def _macro_config(cfg: dict, exp: dict) -> MacroConfig:
    try:
        mc = MacroConfig.from_dict(cfg.get("macro", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad macro config: {e}") from e
    if exp.get("sigma_u") is not None:
        mc = replace(mc, analog=replace(mc.analog, sigma_u=float(exp["sigma_u"])), mode="mismatch")
    if exp.get("mode") is not None:
        mc = replace(mc, mode=exp["mode"])
    if "seed" in exp and mc.mode == "mismatch" and "seed" not in cfg.get("macro", {}):
        mc = replace(mc, seed=int(exp["seed"]))
    return mc


# ---------------------------------------------------------------------------
# Output


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(args, fmt: str, summary: dict, csv_text: str | None) -> None:
    if fmt == "json" or csv_text is None:
        text = dumps(summary)
        if args.out:
            atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        return
    if args.out:
        atomic_write(args.out, csv_text)
        atomic_write(args.out.with_name(args.out.name + ".summary.json"), dumps(summary))
    else:
        sys.stdout.write(csv_text)


# ---------------------------------------------------------------------------
# Commands


def cmd_xfer(args, cfg, exp):
    mc = _macro_config(cfg, exp)
    sweep = metrology.transfer_sweep(mc, unit=int(exp["unit"]), repeats=int(exp["repeats"]), noise_seed=int(exp["seed"]))
    loc, ratio = metrology.max_inl_location(sweep)
    result = {
        "points": len(sweep.x),
        "gain": sweep.gain,
        "gain_expected": -2032 / 2048,
        "offset": sweep.offset,
        "max_abs_inl_lsq": sweep.max_abs_inl,
        "max_abs_inl_endpoint": float(np.max(np.abs(sweep.inl_endpoint))),
        "max_abs_inl_reference": float(np.max(np.abs(sweep.inl_reference))),
        "matches_ideal": sweep.matches_ideal,
        "max_inl_location": loc,
        "zero_peak_ratio": ratio,
    }
    if int(exp["seeds"]) > 0:
        base = mc if mc.mode == "mismatch" else replace(mc, mode="mismatch")
        seeds = range(int(exp["seed"]), int(exp["seed"]) + int(exp["seeds"]))
        result["zero_crossing"] = metrology.zero_crossing_inl(base, seeds, repeats=int(exp["repeats"])).to_dict()
    return {"macro": mc.to_dict()}, result, rows_csv(list(sweep.to_rows()))


def cmd_rms(args, cfg, exp):
    mc = _macro_config(cfg, exp)
    if int(exp["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    rep = metrology.rms_error(mc, int(exp["trials"]), int(exp["seed"]))
    return {"macro": mc.to_dict()}, rep.to_dict(), rows_csv([rep.to_dict()])


def cmd_mc_mismatch(args, cfg, exp):
    exp = dict(exp)
    exp.pop("sigma_u", None)
    mc = _macro_config(cfg, exp)
    sigmas = [float(s) for s in exp["sigma_list"]]
    if not sigmas or int(exp["seeds"]) < 1 or int(exp["trials"]) < 1:
        raise ConfigError("sigma_list must be non-empty; seeds and trials must be >= 1")
    pts = metrology.mismatch_sweep(mc, sigmas, int(exp["seeds"]), int(exp["trials"]), int(exp["seed"]))
    result = {
        "points": [
            {"sigma": p.sigma, "median": p.median, "p05": p.p05, "p95": p.p95, "mean": p.mean, "median_stderr": p.median_stderr}
            for p in pts
        ],
        "non_decreasing": metrology.is_non_decreasing(pts),
        "quantization_floor_pct": metrology.QUANT_FLOOR_PCT,
        "reference_rms_pct": metrology.REFERENCE_RMS_PCT,
    }
    return {"macro": mc.to_dict()}, result, metrology.curve_csv(pts)


def cmd_adc_char(args, cfg, exp):
    mc = _macro_config(cfg, {})
    if int(exp["seeds"]) < 1:
        raise ConfigError("seeds must be >= 1")
    rep = metrology.adc_characterization(
        float(exp["sigma_u"]), int(exp["seeds"]), int(exp["lsb_units"]), mc.adc, int(exp["seed"])
    )
    rows = [{"seed_index": i, "dnl_rms": v} for i, v in enumerate(rep.dnl_rms)]
    summary = rep.to_dict()
    summary.pop("dnl_rms")
    return {"adc": mc.adc.to_dict()}, summary, rows_csv(rows)


def cmd_doa(args, cfg, exp):
    mc = _macro_config(cfg, exp)
    sc_dict = dict(cfg.get("doa", {}))
    sc_dict.setdefault("seed", int(exp["seed"]))
    if args.seed is not None:
        sc_dict["seed"] = args.seed
    if args.snr_db is not None:
        sc_dict["snr_db"] = args.snr_db
    if args.angle is not None:
        sc_dict["source_angle"] = args.angle
    try:
        sc = doaapp.DoaScenario.from_dict(sc_dict)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad doa config: {e}") from e
    if int(exp["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    rep = doaapp.rmse_experiment(sc, int(exp["trials"]), mc, exp.get("random_angle"))
    return {"macro": mc.to_dict(), "doa": sc.to_dict()}, rep.summary(), rep.to_csv()


def cmd_cost(args, cfg, exp):
    if args.sample:
        return None, costmodel.SAMPLE_CONFIG, None
    try:
        costs = costmodel.ComponentCosts.from_dict(cfg.get("cost", costmodel.SAMPLE_CONFIG))
    except (TypeError, ValueError, AttributeError) as e:
        raise ConfigError(f"bad cost config: {e}") from e
    table = costmodel.evaluate_architectures(costs)
    red = costmodel.reduction_report(table)
    result = {"table": table, "reductions": red, "illustrative": "cost" not in cfg}
    return {"cost": costs.to_dict()}, result, costmodel.table_csv(table, red)


def cmd_selftest(args, cfg, exp):
    checks = selftest.run(int(exp["seed"]), int(exp["trials"]))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}", file=sys.stderr)
    result = {"checks": [c.__dict__ for c in checks], "passed": all(c.passed for c in checks)}
    return {}, result, rows_csv([c.__dict__ for c in checks])


COMMANDS = {
    "xfer": cmd_xfer,
    "rms": cmd_rms,
    "mc-mismatch": cmd_mc_mismatch,
    "adc-char": cmd_adc_char,
    "doa": cmd_doa,
    "cost": cmd_cost,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        exp = _experiment(args, cfg)
        echoed, result, csv_text = COMMANDS[args.command](args, cfg, exp)
    except ConfigError as e:
        print(f"ccim: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"ccim: invalid parameters: {e}", file=sys.stderr)
        return 1
    fmt = args.format or DEFAULT_FORMAT[args.command]
    if echoed is None:
        summary = result
    else:
        summary = {"command": args.command, "config": {**echoed, "experiment": exp}, "result": result}
    _emit(args, fmt, summary, csv_text)
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    if args.command == "selftest" and not result["passed"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
