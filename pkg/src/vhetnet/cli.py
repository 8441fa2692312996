"""Command-line sweeps and analytic-vs-simulation validation.

Exit status: 0 on success, 1 when a validation check fails, 2 on usage or
configuration errors. The worker count comes from ``VHETNET_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import association as assoc
from . import coverage as cov
from . import interference as intf
from . import montecarlo as mc
from . import nearest
from .geometry import UserFrame
from .params import ALL_KINDS, BsKind, NetworkParams, ParameterError, load_params

log = logging.getLogger("vhetnet")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
METHODS = ("analytic-approx", "analytic-exact", "mc", "both")
DEFAULT_LAMBDA_A = (0.0, 0.05, 0.1, 0.15, 0.2, 0.3)
DEFAULT_ASSOC_R_E = (0.0, 4.0, 8.0, 12.0)
DEFAULT_VALIDATE_R_U = (4.0, 8.0, 12.0, 20.0)
MIN_MC_N = 100
COVERAGE_TOL = 0.02


class UsageError(Exception):
    pass


# -- argument helpers ------------------------------------------------------------

def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise UsageError(f"bad grid {text!r}: expected start:stop:step with step > 0")
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(max(0, n))]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None
    if not values:
        raise UsageError(f"grid {text!r} is empty")
    return values


def r_u_grid(fine: bool) -> list[float]:
    return parse_grid("0:30:1" if fine else "0:30:3")


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def params_from_args(args) -> NetworkParams:
    return load_params(args.config, parse_overrides(args.set))


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return str(x)


def write_table(args, header: list[str], rows: list[list], meta: dict, blocks=None):
    """CSV (or gnuplot layout) to ``--out`` or stdout, plus a JSON sidecar."""
    buf = io.StringIO()
    if getattr(args, "format", "csv") == "gnuplot":
        buf.write("# " + " ".join(header) + "\n")
        prev = None
        for i, row in enumerate(rows):
            key = blocks[i] if blocks else None
            if prev is not None and key != prev:
                buf.write("\n\n")
            prev = key
            buf.write(" ".join(fmt(x) if fmt(x) else "nan" for x in row) + "\n")
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
        Path(str(args.out) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def base_meta(args, params: NetworkParams, **extra) -> dict:
    return {"version": __version__, "command": args.command, "params": params.as_dict(),
            "seed": args.seed, "mc_n": args.mc_n, "method": args.method, **extra}


def _methods(method: str) -> tuple[str | None, bool]:
    analytic = {"analytic-approx": cov.APPROXIMATE, "analytic-exact": cov.EXACT,
                "both": cov.APPROXIMATE, "mc": None}[method]
    return analytic, method in ("mc", "both")


def _check_mc_n(args, uses_mc: bool):
    if uses_mc and args.mc_n < MIN_MC_N:
        raise UsageError(f"--mc-n must be at least {MIN_MC_N} when the method includes mc")


def _pool_map(fn, items):
    workers = mc.worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _analytic_point(task):
    r_u, params, method, high = task
    res = cov.coverage(UserFrame.from_params(r_u, params), params, method,
                       allow_high_order=high)
    return res.p_total, res.abs_error


def _assoc_point(task):
    r_u, params = task
    return assoc.association_probabilities(UserFrame.from_params(r_u, params), params)


# -- subcommands -----------------------------------------------------------------

def cmd_coverage_sweep(args) -> int:
    params = params_from_args(args)
    analytic, use_mc = _methods(args.method)
    _check_mc_n(args, use_mc)
    var = args.var
    if args.grid is not None:
        grid = parse_grid(args.grid)
    else:
        grid = r_u_grid(args.fine) if var == "r_u" else None
    if grid is None:
        raise UsageError(f"--grid is required when sweeping {var}")
    points = []
    for value in grid:
        if var == "r_u":
            r_u, p = value, params
        else:
            r_u, p = args.r_u, params.replace(**{var: value})
        if r_u < 0:
            raise UsageError("r_u must be non-negative")
        points.append((r_u, p))
    an = None
    if analytic:
        an = _pool_map(_analytic_point,
                       [(r, p, analytic, args.allow_high_order) for r, p in points])
    header = ["variable", "value", "r_u", "r_e", "lambda_A", "method", "p_analytic",
              "p_analytic_err", "p_mc", "p_mc_ci95", "abs_diff"]
    rows = []
    for i, (value, (r_u, p)) in enumerate(zip(grid, points)):
        pa, pe = an[i] if an else (None, None)
        pm = ci = diff = None
        if use_mc:
            est = mc.estimate(UserFrame.from_params(r_u, p), p, args.mc_n, args.seed)
            pm, ci = est.coverage.mean, est.coverage.half_width_95
            if pa is not None:
                diff = abs(pa - pm)
        rows.append([var, value, r_u, p.r_e, p.lambda_A, args.method, pa, pe, pm, ci, diff])
    write_table(args, header, rows, base_meta(args, params, variable=var, grid=grid))
    return EXIT_OK


def cmd_association_sweep(args) -> int:
    params = params_from_args(args)
    analytic, use_mc = _methods(args.method)
    _check_mc_n(args, use_mc)
    r_es = parse_grid(args.r_e) if args.r_e is not None else list(DEFAULT_ASSOC_R_E)
    grid = parse_grid(args.grid) if args.grid is not None else r_u_grid(args.fine)
    tasks = [(r_u, params.replace(r_e=r_e)) for r_e in r_es for r_u in grid]
    an = _pool_map(_assoc_point, tasks) if analytic else None
    header = ["r_e", "r_u", "lambda_A", "A_L", "A_N", "A_T", "A_T_direct", "A_L_mc", "A_N_mc",
              "A_T_mc", "A_L_mc_ci95", "A_N_mc_ci95", "A_T_mc_ci95"]
    rows, blocks = [], []
    for i, (r_u, p) in enumerate(tasks):
        row = [p.r_e, r_u, p.lambda_A]
        if an:
            a = an[i]
            row += [a.L, a.N, a.T, a.T_direct]
        else:
            row += [None] * 4
        if use_mc:
            est = mc.estimate(UserFrame.from_params(r_u, p), p, args.mc_n, args.seed)
            row += [est.association[k].mean for k in ALL_KINDS]
            row += [est.association[k].half_width_95 for k in ALL_KINDS]
        else:
            row += [None] * 6
        rows.append(row)
        blocks.append(p.r_e)
    write_table(args, header, rows, base_meta(args, params, r_e=r_es, r_u=grid), blocks)
    return EXIT_OK


def cmd_min_coverage(args) -> int:
    params = params_from_args(args)
    analytic, use_mc = _methods(args.method)
    _check_mc_n(args, use_mc)
    r_es = parse_grid(args.r_e) if args.r_e is not None else parse_grid("0:20:1")
    lams = parse_grid(args.lambda_a) if args.lambda_a is not None else list(DEFAULT_LAMBDA_A)
    inner = r_u_grid(args.fine)
    header = ["lambda_A", "r_e", "source", "p_min", "argmin_r_u", "is_best_r_e"]
    sources = ([("analytic", analytic)] if analytic else []) + ([("mc", None)] if use_mc else [])
    rows, blocks = [], []
    for lam in lams:
        for name, method in sources:
            table = []
            for r_e in r_es:
                p = params.replace(lambda_A=lam, r_e=r_e)
                if name == "analytic":
                    tasks = [(r, p, method, args.allow_high_order) for r in inner]
                    vals = [v for v, _ in _pool_map(_analytic_point, tasks)]
                else:
                    vals = [mc.estimate(UserFrame.from_params(r, p), p, args.mc_n, args.seed)
                            .coverage.mean for r in inner]
                k = int(np.argmin(vals))
                table.append((r_e, vals[k], inner[k]))
            best = max(range(len(table)), key=lambda i: table[i][1])
            for i, (r_e, pmin, arg) in enumerate(table):
                rows.append([lam, r_e, name, pmin, arg, i == best])
                blocks.append((lam, name))
    write_table(args, header, rows,
                base_meta(args, params, lambda_A=lams, r_e=r_es, r_u=inner,
                          note="lambda_A grid is a chosen neighbourhood of the studied densities"),
                blocks)
    return EXIT_OK


# -- validation ------------------------------------------------------------------

def _status(diff: float, tol: float, noise: float) -> str:
    """PASS/FAIL, or INCONCLUSIVE when the MC noise alone exceeds the tolerance."""
    if noise > tol:
        return "INCONCLUSIVE"
    return "PASS" if diff <= tol else "FAIL"


def validation_report(params: NetworkParams, r_us, n: int, seed: int) -> list[list]:
    """Rows of (check, r_u, value, reference, tolerance, status)."""
    rows = []
    warn = []
    for r_u in r_us:
        frame = UserFrame.from_params(r_u, params)
        est = mc.estimate(frame, params, n, seed)
        res = cov.coverage(frame, params)
        ci = est.coverage.half_width_95
        diff = abs(res.p_total - est.coverage.mean)
        rows.append(["coverage_approx_vs_mc", r_u, res.p_total, est.coverage.mean, COVERAGE_TOL,
                     _status(diff, COVERAGE_TOL, ci)])

        a = assoc.association_probabilities(frame, params)
        for kind in ALL_KINDS:
            e = est.association[kind]
            tol = max(3.0 * e.std_error, 1e-3)
            rows.append([f"association_{kind}_vs_mc", r_u, a[kind], e.mean, tol,
                         _status(abs(a[kind] - e.mean), tol, 0.0 if n >= 1000 else 1.0)])
        rows.append(["association_simplex", r_u, a.T_direct, a.T, assoc.SIMPLEX_TOL,
                     "PASS" if abs(a.T_direct - a.T) <= assoc.SIMPLEX_TOL else "FAIL"])
        rows.append(["exclusion_violations", r_u, est.violations, 0, 0,
                     "PASS" if est.violations == 0 else "FAIL"])

        samples = mc.nearest_distance_samples(frame, params, n, seed + 1)
        band = math.sqrt(math.log(2.0 / 0.01) / (2.0 * n))
        zs = np.linspace(0.05, 30.0, 60)
        for kind in ALL_KINDS:
            emp = np.searchsorted(np.sort(samples[kind]), zs, side="right") / n
            ana = np.array([nearest.cdf(kind, z, frame, params) for z in zs])
            ks = float(np.max(np.abs(emp - ana)))
            rows.append([f"nearest_{kind}_cdf_ks", r_u, ks, 0.0, band,
                         _status(ks, band, 0.0 if n >= 1000 else 1.0)])

        serving = max(ALL_KINDS, key=lambda k: a[k])
        z_typ = 0.5
        s = cov.serving_threshold(serving, z_typ, params)
        z_max = mc.default_r_max(r_u) - r_u
        means, ses = {}, {}
        for kind in ALL_KINDS:
            m_, se_ = mc.laplace_mc([s], kind, serving, z_typ, frame, params, n, seed + 2, z_max)
            ana = math.exp(-intf.laplace_exponent(s, kind, serving, z_typ, frame, params,
                                                  z_max=z_max).value)
            tol = max(3.0 * float(se_[0]), 1e-4)
            rows.append([f"laplace_{kind}_vs_mc", r_u, ana, float(m_[0]), tol,
                         _status(abs(ana - float(m_[0])), tol, 0.0 if n >= 1000 else 1.0)])
            tail = intf.laplace_exponent(s, kind, serving, z_typ, frame, params).value \
                - intf.laplace_exponent(s, kind, serving, z_typ, frame, params, z_max=z_max).value
            if tail > 1e-3:
                warn.append(["mc_truncation_tail_" + str(kind), r_u, tail, 0.0, 1e-3, "WARN"])

        if params.m_L == 2 and params.lambda_A > 0:
            z = 1.0
            lo = cov.conditional_coverage_approx(BsKind.L, z, frame, params, eps=1.0)
            ex = cov.conditional_coverage_exact(BsKind.L, z, frame, params)
            hi = cov.conditional_coverage_approx(BsKind.L, z, frame, params)
            ok = lo <= ex + 1e-8 and ex <= hi + 1e-8
            rows.append(["sandwich_L", r_u, ex, lo, hi, "PASS" if ok else "FAIL"])
        if res.abs_error > 1e-6:
            warn.append(["quadrature_error", r_u, res.abs_error, 0.0, 1e-6, "WARN"])
    if n < 1000:
        warn.append(["mc_sample_size", "", n, 1000, "", "WARN"])
    return rows + warn


def cmd_validate(args) -> int:
    params = params_from_args(args)
    r_us = parse_grid(args.grid) if args.grid is not None else list(DEFAULT_VALIDATE_R_U)
    if args.mc_n < 1:
        raise UsageError("--mc-n must be positive")
    rows = validation_report(params, r_us, args.mc_n, args.seed)
    header = ["check", "r_u", "value", "reference", "tolerance", "status"]
    write_table(args, header, rows, base_meta(args, params, r_u=r_us))
    failed = sum(1 for r in rows if r[-1] == "FAIL")
    inconclusive = sum(1 for r in rows if r[-1] == "INCONCLUSIVE")
    print(f"{len(rows)} checks, {failed} failed, {inconclusive} inconclusive", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="parameter file (key = value lines)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one parameter; repeatable")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--mc-n", type=int, default=100_000)
    common.add_argument("--method", choices=METHODS, default="analytic-approx")
    common.add_argument("--fine", action="store_true", help="1 km r_u grid instead of 3 km")
    common.add_argument("--allow-high-order", action="store_true",
                        help="allow exact coverage with Nakagami m >= 3 (numerical derivatives)")
    common.add_argument("--format", choices=("csv", "gnuplot"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vhetnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage-sweep", parents=[common], help="coverage versus one parameter")
    p.add_argument("--var", choices=("r_u", "lambda_A", "r_e"), default="r_u")
    p.add_argument("--grid", help="start:stop:step or a comma list")
    p.add_argument("--r-u", type=float, default=12.0, help="user distance when not sweeping r_u")
    p.set_defaults(func=cmd_coverage_sweep)

    p = sub.add_parser("association-sweep", parents=[common], help="association versus r_u")
    p.add_argument("--grid", help="r_u grid")
    p.add_argument("--r-e", help="exclusion radii (grid syntax)")
    p.set_defaults(func=cmd_association_sweep)

    p = sub.add_parser("min-coverage", parents=[common],
                       help="minimum coverage over r_u versus exclusion radius")
    p.add_argument("--r-e", help="exclusion radii (default 0:20:1)")
    p.add_argument("--lambda-a", help="ABS densities (default 0,0.05,0.1,0.15,0.2,0.3)")
    p.set_defaults(func=cmd_min_coverage)

    p = sub.add_parser("validate", parents=[common], help="analytic results against Monte Carlo")
    p.add_argument("--grid", help="r_u values to check")
    p.set_defaults(func=cmd_validate, mc_n=20_000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError, cov.UnsupportedOrderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
