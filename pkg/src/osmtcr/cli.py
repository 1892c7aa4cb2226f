"""Command-line harness for the OSM experiments.

Subcommands: factor-curve, optimize, solve, table <1|2|3|4>, psweep, rectifier.
All outputs go to ``--out`` (or $OSMTCR_OUT, or ./out). CSV floats carry 17
significant digits and JSON keys are sorted, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import jsonschema
import numpy as np

from .analysis import (
    PhysicalParams,
    ScaledRobin,
    StandardRobin,
    frequency_band,
    rho_of_spec,
    spec_to_dict,
)
from .optimizer import (
    asymptotic_p_rc,
    optimal_p_closed_form,
    optimal_p_equioscillation,
    optimize_scaled_robin,
    optimize_standard_robin,
    predicted_parameter,
)
from .rectifier import RectifierConfig, run_both_directions, write_summary
from .schwarz import OsmConfig, run_osm, two_layer_problems

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2
OUT_ENV = "OSMTCR_OUT"
VARIANTS = ("standard", "scaled")

# Published iteration counts, keyed by table then variant.
REFERENCE_COUNTS = {
    1: {"standard": [21, 21, 21, 21, 21], "scaled": [9, 9, 9, 9, 9]},
    2: {"standard": [69, 28, 21, 9, 4], "scaled": [67, 19, 6, 3, 2]},
    3: {"standard": [21, 8, 4, 2], "scaled": [6, 5, 4, 2]},
    4: {"standard": [31, 21, 10, 5, 3, 3, 2], "scaled": [6, 6, 5, 4, 3, 3, 2]},
}
TABLE1_MESHES = [1 / 32, 1 / 64, 1 / 128, 1 / 256, 1 / 512]
TABLE2_CONTRASTS = [2.0, 20.0, 200.0, 2000.0, 20000.0]
TABLE3_SCALES = [1.0, 10.0, 100.0, 1000.0]
TABLE4_RC = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0]

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kappa1": _pos, "kappa2": _pos, "c1": _nonneg, "c2": _nonneg, "r_c": _nonneg,
        "h": _pos,
        "meshes": {"type": "array", "items": _pos, "minItems": 1},
        "r_c_list": {"type": "array", "items": _nonneg, "minItems": 1},
        "values": {"type": "array", "items": _pos, "minItems": 1},
        "transmission": {"enum": ["standard_robin", "scaled_robin"]},
        "p": _pos,
        "tol": _pos,
        "max_iter": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "n_k": {"type": "integer", "minimum": 2},
        "n_p": {"type": "integer", "minimum": 2},
        "n_samples": {"type": "integer", "minimum": 2},
        "r_inner": _pos, "r_interface": _pos, "r_outer": _pos,
        "T_hot": _pos, "T_cold": _pos,
        "r_c_forward": _nonneg, "r_c_reverse": _nonneg,
        "mesh_n": {"type": "integer", "minimum": 2},
        "max_outer": {"type": "integer", "minimum": 1},
        "picard": {"enum": ["interleaved", "converged"]},
    },
}


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc


def output_dir(cli_out: Optional[str]) -> Path:
    out = Path(cli_out or os.environ.get(OUT_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _params(cfg: dict, **defaults) -> PhysicalParams:
    d = {"kappa1": 2.0, "kappa2": 0.01, "c1": 0.0, "c2": 0.0, "r_c": 0.01}
    d.update(defaults)
    for key in d:
        if key in cfg:
            d[key] = float(cfg[key])
    try:
        return PhysicalParams(**d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- table cells

@dataclass(frozen=True)
class Cell:
    table: int
    label: str
    value: float
    params: PhysicalParams
    h: float
    variant: str
    tol: float = 1e-6
    seed: int = 0
    max_iter: int = 500


def robin_parameter(variant: str, params: PhysicalParams, h: float):
    """Optimized transmission spec used by the tables: closed form or numeric min-max."""
    band = frequency_band(1.0, h)
    if variant == "scaled":
        return ScaledRobin(optimize_scaled_robin(params, band, h).p_star)
    if variant == "standard":
        return StandardRobin(optimize_standard_robin(params, band).p_star)
    raise ValueError(f"unknown variant {variant!r}")


def run_cell(cell: Cell) -> dict:
    spec = robin_parameter(cell.variant, cell.params, cell.h)
    problems = two_layer_problems(cell.params, cell.h)
    trace = run_osm(problems, OsmConfig(cell.params, spec, cell.tol, cell.max_iter, cell.seed))
    return {
        "table": cell.table,
        "label": cell.label,
        "value": cell.value,
        "variant": cell.variant,
        "h": cell.h,
        "kappa1": cell.params.kappa1,
        "kappa2": cell.params.kappa2,
        "r_c": cell.params.r_c,
        "p": spec.p,
        "iterations": trace.iterations_used,
        "converged": trace.converged,
    }


def table_cells(table: int, cfg: Optional[dict] = None, variants: Sequence[str] = VARIANTS) -> list[Cell]:
    """The parameter grid of one published table, with optional overrides."""
    cfg = cfg or {}
    tol = float(cfg.get("tol", 1e-6))
    seed = int(cfg.get("seed", 0))
    max_iter = int(cfg.get("max_iter", 500))
    h = float(cfg.get("h", 1 / 512))
    grid: list[tuple[str, float, PhysicalParams, float]] = []
    if table == 1:
        base = _params(cfg)
        for m in cfg.get("meshes", TABLE1_MESHES):
            grid.append(("h", float(m), base, float(m)))
    elif table == 2:
        base = _params(cfg)
        for lam in cfg.get("values", TABLE2_CONTRASTS):
            grid.append(("lambda", float(lam), base.replace(kappa1=lam * base.kappa2), h))
    elif table == 3:
        base = _params(cfg)
        for s in cfg.get("values", TABLE3_SCALES):
            grid.append(("scale", float(s), base.replace(kappa1=s * base.kappa1, kappa2=s * base.kappa2), h))
    elif table == 4:
        base = _params(cfg)
        for rc in cfg.get("r_c_list", TABLE4_RC):
            grid.append(("r_c", float(rc), base.replace(r_c=rc), h))
    else:
        raise ConfigError(f"no table {table}")
    return [Cell(table, label, value, params, hh, v, tol, seed, max_iter)
            for v in variants for (label, value, params, hh) in grid]


_TABLE_GRIDS = {1: TABLE1_MESHES, 2: TABLE2_CONTRASTS, 3: TABLE3_SCALES, 4: TABLE4_RC}


def reference_for(table: int, variant: str, value: float) -> Optional[int]:
    """Published count for a grid value, or None if the value is not in the table."""
    for i, v in enumerate(_TABLE_GRIDS[table]):
        if math.isclose(v, value, rel_tol=1e-9):
            return REFERENCE_COUNTS[table][variant][i]
    return None


def run_table(table: int, cfg: Optional[dict] = None, jobs: int = 1,
              variants: Sequence[str] = VARIANTS) -> list[dict]:
    cells = table_cells(table, cfg, variants)
    rows = _map(run_cell, cells, jobs)
    for r in rows:
        r["reference"] = reference_for(table, r["variant"], r["value"])
    return rows


TABLE_HEADER = ["table", "label", "value", "variant", "h", "kappa1", "kappa2", "r_c", "p",
                "iterations", "converged", "reference"]


def cmd_table(args, cfg) -> int:
    table = int(args.table)
    rows = run_table(table, cfg, args.jobs)
    out = output_dir(args.out)
    write_csv(out / f"table{table}.csv", TABLE_HEADER,
              ([r[k] if r[k] is not None else "" for k in TABLE_HEADER] for r in rows))
    write_json(out / f"table{table}.json", {"config": cfg, "table": table, "rows": rows})
    for r in rows:
        print(f"{r['variant']:>8} {r['label']}={r['value']:.6g}: {r['iterations']} iterations"
              f" (reference {r['reference']}){'' if r['converged'] else ' NOT CONVERGED'}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOT_CONVERGED


# --------------------------------------------------------------- other commands

def factor_curves(kappa1: float, r_c_list: Sequence[float], h: float = 1e-8,
                  kappa2: float = 0.01, n_k: int = 2048, n_samples: int = 2048):
    """Optimized standard and scaled convergence factors over the band for each Rc."""
    band = frequency_band(1.0, h)
    ks = band.logspace(n_k)
    rows, meta = [], []
    for rc in r_c_list:
        params = PhysicalParams(kappa1, kappa2, r_c=rc)
        std = optimize_standard_robin(params, band, n_samples)
        sca = optimize_scaled_robin(params, band, h)
        r_std = np.abs(np.asarray(rho_of_spec(ks, StandardRobin(std.p_star), params)))
        r_sca = np.abs(np.asarray(rho_of_spec(ks, ScaledRobin(sca.p_star), params)))
        rows.extend(zip([float(rc)] * len(ks), ks.tolist(), r_std.tolist(), r_sca.tolist()))
        meta.append({"r_c": rc, "p_standard": std.p_star, "max_rho_standard": std.predicted_max_rho,
                     "p_scaled": sca.p_star, "max_rho_scaled": sca.predicted_max_rho,
                     "scaled_method": sca.method})
    return rows, meta


def cmd_factor_curve(args, cfg) -> int:
    kappa1 = float(cfg.get("kappa1", 2.0))
    rows, meta = factor_curves(kappa1, cfg.get("r_c_list", [0.0, 1e-4, 1e-2, 1.0]),
                               float(cfg.get("h", 1e-8)), float(cfg.get("kappa2", 0.01)),
                               int(cfg.get("n_k", 2048)), int(cfg.get("n_samples", 2048)))
    out = output_dir(args.out)
    write_csv(out / "factor_curve.csv", ["r_c", "k", "rho_standard_opt", "rho_scaled_opt"], rows)
    write_json(out / "factor_curve.json", {"config": cfg, "curves": meta})
    return EXIT_OK


def optimize_report(params: PhysicalParams, h: float, n_samples: int = 2048) -> dict:
    band = frequency_band(1.0, h)
    report = {"k_min": band.k_min, "k_max": band.k_max}
    if params.r_c > 0 and params.c1 == 0 and params.c2 == 0:
        cf = optimal_p_closed_form(params, band, h)
        report["closed_form"] = {"p": cf.p_star, "max_rho": cf.predicted_max_rho}
        c_hat, rho_hat = asymptotic_p_rc(params, band.k_min)
        report["asymptotic"] = {"p": c_hat, "max_rho": rho_hat}
    if params.r_c > 0:
        eq = optimal_p_equioscillation(params, band)
        report["equioscillation"] = {"p": eq.p_star, "max_rho": eq.predicted_max_rho}
    pred = predicted_parameter(params, band, h)
    report["predicted"] = {"p": pred.p_star, "max_rho": pred.predicted_max_rho, "method": pred.method}
    std = optimize_standard_robin(params, band, n_samples)
    report["standard_robin"] = {"p": std.p_star, "max_rho": std.predicted_max_rho}
    return report


def cmd_optimize(args, cfg) -> int:
    params = _params(cfg)
    h = float(cfg.get("h", 1 / 64))
    report = optimize_report(params, h, int(cfg.get("n_samples", 2048)))
    out = output_dir(args.out)
    write_json(out / "optimize.json", {"config": cfg, "result": report})
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_solve(args, cfg) -> int:
    params = _params(cfg)
    h = float(cfg.get("h", 1 / 64))
    kind = cfg.get("transmission", "scaled_robin")
    if "p" in cfg:
        spec = (ScaledRobin if kind == "scaled_robin" else StandardRobin)(float(cfg["p"]))
    else:
        spec = robin_parameter("scaled" if kind == "scaled_robin" else "standard", params, h)
    osm = OsmConfig(params, spec, float(cfg.get("tol", 1e-6)), int(cfg.get("max_iter", 500)),
                    int(cfg.get("seed", 0)))
    trace = run_osm(two_layer_problems(params, h), osm)
    out = output_dir(args.out)
    trace.to_csv(out / "trace.csv")
    summary = trace.summary()
    summary["input_config"] = cfg
    summary["h"] = h
    write_json(out / "solve.json", summary)
    print(f"{spec_to_dict(spec)}: {trace.iterations_used} iterations, converged={trace.converged}")
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


@dataclass(frozen=True)
class SweepPoint:
    params: PhysicalParams
    h: float
    p: float
    tol: float
    seed: int
    max_iter: int


def _sweep_point(pt: SweepPoint) -> dict:
    trace = run_osm(two_layer_problems(pt.params, pt.h),
                    OsmConfig(pt.params, ScaledRobin(pt.p), pt.tol, pt.max_iter, pt.seed))
    return {"r_c": pt.params.r_c, "p": pt.p, "iterations": trace.iterations_used,
            "saturated": not trace.converged}


def psweep(params: PhysicalParams, r_c_list: Sequence[float], h: float = 1 / 256, n_p: int = 60,
           tol: float = 1e-6, seed: int = 0, max_iter: int = 500, jobs: int = 1):
    """Iteration counts of the scaled Robin OSM over a log grid of p for each Rc."""
    band = frequency_band(1.0, h)
    grid = np.geomspace(band.k_min, band.k_max, n_p)
    points, markers = [], []
    for rc in r_c_list:
        pr = params.replace(r_c=rc)
        markers.append({"r_c": rc, "p_closed_form": optimize_scaled_robin(pr, band, h).p_star,
                        "c_hat": asymptotic_p_rc(pr, band.k_min)[0] if rc > 0 else None})
        points.extend(SweepPoint(pr, h, float(p), tol, seed, max_iter) for p in grid)
    return _map(_sweep_point, points, jobs), markers


def cmd_psweep(args, cfg) -> int:
    params = _params(cfg)
    rows, markers = psweep(params, cfg.get("r_c_list", [1e-3, 1e-2, 1e-1, 1.0]),
                           float(cfg.get("h", 1 / 256)), int(cfg.get("n_p", 60)),
                           float(cfg.get("tol", 1e-6)), int(cfg.get("seed", 0)),
                           int(cfg.get("max_iter", 500)), args.jobs)
    out = output_dir(args.out)
    write_csv(out / "psweep.csv", ["r_c", "p", "iterations", "saturated"],
              ([r["r_c"], r["p"], r["iterations"], r["saturated"]] for r in rows))
    write_json(out / "psweep.json", {"config": cfg, "markers": markers})
    return EXIT_OK


def cmd_rectifier(args, cfg) -> int:
    keys = ("r_inner", "r_interface", "r_outer", "T_hot", "T_cold", "mesh_n", "tol",
            "max_outer", "seed", "picard")
    base = RectifierConfig(**{k: cfg[k] for k in keys if k in cfg})
    res = run_both_directions(base, float(cfg.get("r_c_forward", 9.280e-5)),
                              float(cfg.get("r_c_reverse", 0.01552)))
    out = output_dir(args.out)
    res["forward"].profiles_to_csv(out / "rectifier_forward.csv")
    res["reverse"].profiles_to_csv(out / "rectifier_reverse.csv")
    write_summary(res, out / "rectifier.json")
    for d in ("forward", "reverse"):
        r = res[d]
        print(f"{d}: {r.osm_iterations} iterations, heat flux {r.heat_flux:.6g} W/m")
    print(f"rectification ratio {res['ratio']:.6g}")
    ok = res["forward"].converged and res["reverse"].converged
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osmtcr", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--seed", type=int, help="random seed for initial interface data")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("factor-curve", cmd_factor_curve), ("optimize", cmd_optimize),
                     ("solve", cmd_solve), ("psweep", cmd_psweep), ("rectifier", cmd_rectifier)):
        sub.add_parser(name, parents=[common]).set_defaults(func=fn)
    t = sub.add_parser("table", parents=[common])
    t.add_argument("table", choices=["1", "2", "3", "4"])
    t.set_defaults(func=cmd_table)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
            validate_config(cfg)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return args.func(args, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
