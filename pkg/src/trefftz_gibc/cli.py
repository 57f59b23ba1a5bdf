"""Command line driver: ``trefftz-gibc {solve,sweep,check,dump-mesh,dump-system}``."""

import argparse
import csv
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .boundary import SingularSystemError
from .config import ConfigError, RunConfig
from .estimator import build_discretization, reference_series
from .exact import PlaneWave
from .mesh import build_annular_mesh, write_mesh
from .solve import condition_estimate, relative_l2_error, series_field, solve

__all__ = ["main", "run_single", "run_convergence", "CSV_COLUMNS"]

log = logging.getLogger("trefftz_gibc")

CSV_COLUMNS = [
    "h", "1/h", "N_dof", "variant", "rel_l2_vs_variant_exact", "rel_l2_vs_scattering_exact",
    "dg_norm_residual", "condition_estimate", "code_version", "params",
]


def _fmt(x):
    return "" if x is None else repr(float(x))


def run_single(cfg, h=None, kind=None, write=True):
    """Solve one configuration; returns ``(row, metadata, solution)``."""
    t0 = time.perf_counter()
    kind = kind or cfg.kind
    h_used = cfg.h if h is None else h
    resolved = cfg.replace(kind=kind, h=h_used)
    system = build_discretization(resolved)
    sol = solve(system)
    ref_v = reference_series(resolved, "variant")
    ref_s = reference_series(resolved, "scattering")
    zero_data = resolved.amplitude == 0
    err_v = None if ref_v is None or zero_data else relative_l2_error(sol, ref_v)
    err_s = None if ref_s is None or zero_data else relative_l2_error(sol, ref_s)
    dgres = None
    if ref_v is not None:
        fv = series_field(ref_v)

        def diff(pts, el):
            v1, d1 = fv(pts, el)
            v2, d2 = sol.field(pts, el)
            return v1 - v2, d1 - d2

        dgres = system.dg_norm_field(diff)
    cond = condition_estimate(sol, seed=cfg.seed)
    row = {
        "h": _fmt(h_used),
        "1/h": _fmt(1.0 / h_used),
        "N_dof": str(system.n_dofs),
        "variant": kind,
        "rel_l2_vs_variant_exact": _fmt(err_v),
        "rel_l2_vs_scattering_exact": _fmt(err_s),
        "dg_norm_residual": _fmt(dgres),
        "condition_estimate": _fmt(cond),
        "code_version": __version__,
        "params": json.dumps(resolved.as_dict(), sort_keys=True),
    }
    meta = {
        "code_version": __version__,
        "config": resolved.as_dict(),
        "system": system.meta,
        "residual": sol.residual,
        "smallest_pivot": sol.smallest_pivot,
        "condition_estimate": cond,
        "rel_l2_vs_variant_exact": err_v,
        "rel_l2_vs_scattering_exact": err_s,
        "delta_note": "delta defaults to 0.5 (not fixed by the method description)",
    }
    if resolved.mode == "dirichlet":
        th = 2 * np.pi * np.arange(720) / 720
        pts = resolved.a * np.stack([np.cos(th), np.sin(th)], axis=1)
        inc = PlaneWave(resolved.k, resolved.incident_angle, resolved.amplitude)
        meta["dirichlet_sup_residual"] = float(np.max(np.abs(sol(pts) + inc.value(pts))))
    if write and cfg.field_csv:
        meta["field_max_abs_u"] = write_field_grid(sol, resolved, cfg.field_csv)
    meta["elapsed_s"] = time.perf_counter() - t0
    if write and cfg.csv:
        write_rows(cfg.csv, [row])
    if write and cfg.metadata:
        with open(cfg.metadata, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
    return row, meta, sol


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def write_field_grid(sol, cfg, path):
    r = np.linspace(cfg.a, cfg.R, cfg.field_nr)
    th = 2 * np.pi * np.arange(cfg.field_ntheta) / cfg.field_ntheta
    rr, tt = np.meshgrid(r, th, indexing="ij")
    x = rr * np.cos(tt)
    y = rr * np.sin(tt)
    u = sol(np.stack([x.ravel(), y.ravel()], axis=1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "r", "theta", "Re_u", "Im_u", "abs_u"])
        for xi, yi, ri, ti, ui in zip(x.ravel(), y.ravel(), rr.ravel(), tt.ravel(), u):
            w.writerow([repr(xi), repr(yi), repr(ri), repr(ti), repr(ui.real), repr(ui.imag), repr(abs(ui))])
    return float(np.max(np.abs(u)))


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def run_convergence(cfg, h_list=None, variants=None):
    """One row per (h, variant); ``h_list`` must be descending."""
    h_list = tuple(cfg.h_list if h_list is None else h_list)
    variants = tuple(cfg.variants if variants is None else variants)
    if list(h_list) != sorted(h_list, reverse=True):
        raise ConfigError("h_list must be in descending order")
    rows = []
    for kind in variants:
        for h in h_list:
            row, _, _ = run_single(cfg.replace(n_theta=0, n_r=0), h=h, kind=kind, write=False)
            log.info("%s h=%s: variant %s scattering %s", kind, h, row["rel_l2_vs_variant_exact"],
                     row["rel_l2_vs_scattering_exact"])
            rows.append(row)
    if cfg.csv:
        write_rows(cfg.csv, rows)
    return rows


def _load(args):
    overrides = list(args.set or [])
    if args.config:
        return RunConfig.read(args.config, overrides)
    return RunConfig.from_ini("", overrides)


def _cmd_solve(args):
    cfg = _load(args)
    row, meta, _ = run_single(cfg)
    if not cfg.csv:
        w = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerow(row)
    print(json.dumps({"status": "ok", "residual": meta["residual"],
                      "rel_l2_vs_variant_exact": meta["rel_l2_vs_variant_exact"]}), file=sys.stderr)
    return 0


def _cmd_sweep(args):
    cfg = _load(args)
    h_list = tuple(float(h) for h in args.h_list.split(",")) if args.h_list else None
    variants = tuple(v.strip() for v in args.variants.split(",")) if args.variants else None
    rows = run_convergence(cfg, h_list, variants)
    if not cfg.csv:
        w = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return 0


def _cmd_check(args):
    from .invariants import run_checks

    cfg = _load(args)
    results = run_checks(cfg, seed=cfg.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def _cmd_dump_mesh(args):
    cfg = _load(args)
    n_theta, n_r = cfg.grid()
    mesh = build_annular_mesh(cfg.a, cfg.R, n_theta, n_r)
    write_mesh(mesh, args.out)
    print(json.dumps({"status": "ok", "path": args.out, "triangles": mesh.n_triangles}), file=sys.stderr)
    return 0


def _cmd_dump_system(args):
    cfg = _load(args)
    system = build_discretization(cfg)
    paths = system.dump(args.out)
    print(json.dumps({"status": "ok", "paths": list(paths), "n_dofs": system.n_dofs}), file=sys.stderr)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="trefftz-gibc", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="INI configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration value (repeatable)")

    p = sub.add_parser("solve", help="single solve")
    common(p)
    p.set_defaults(func=_cmd_solve)
    p = sub.add_parser("sweep", help="h-convergence sweep over boundary variants")
    common(p)
    p.add_argument("--h-list", help="comma separated, descending")
    p.add_argument("--variants", help="comma separated subset of ABC0..ABC3, ExactNtD")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("check", help="run the invariant suite")
    common(p)
    p.set_defaults(func=_cmd_check)
    p = sub.add_parser("dump-mesh", help="write the mesh as text")
    common(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_dump_mesh)
    p = sub.add_parser("dump-system", help="write matrix and rhs in MatrixMarket format")
    common(p)
    p.add_argument("-o", "--out", required=True, help="output stem")
    p.set_defaults(func=_cmd_dump_system)
    return ap


_EXIT = ((ConfigError, 2), (SingularSystemError, 3), (Exception, 1))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # reported as a machine-readable record
        code = next(c for t, c in _EXIT if isinstance(exc, t))
        rec = {"status": "error", "command": args.command, "error_type": type(exc).__name__,
               "message": str(exc), "exit_code": code}
        print(json.dumps(rec), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
