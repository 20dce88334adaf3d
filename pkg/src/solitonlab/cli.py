"""Command-line front end and serialization formats.

Subcommands: validate, soliton, spectrum, flow, rayleigh, weights,
catalog.  Algebras come either from the built-in catalog (by name) or
from JSON files with the schema

    {"dim": n, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}, ...],
     "metric": [[...], ...]}        # metric optional, defaults to identity

with 1-based bracket indices, i < j.  Reports are JSON on stdout;
trajectories are CSV.  Files are written atomically (temp file +
rename).  Exit codes: 0 success, 1 checked failure (validation or
verification failed, flow hit a singularity, series did not converge),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass

import numpy as np

from . import catalog
from .errors import (DomainError, GridTooCoarse, InvalidInput, InvalidMetric,
                     InvalidPerturbation, InvalidWeight, NotInCatalog,
                     SingularityReached, StiffnessError,
                     UnsupportedDerivation)
from .liealg import LieAlgebra, validate
from .soliton import exact_unnormalized_solution, solve_soliton

_USAGE_ERRORS = (InvalidInput, InvalidMetric, InvalidWeight, NotInCatalog,
                 GridTooCoarse, InvalidPerturbation, UnsupportedDerivation,
                 DomainError, json.JSONDecodeError, OSError, KeyError,
                 TypeError, ValueError)


@dataclass
class RunConfig:
    tol: float = 1e-10
    dt: float = 1e-3
    t_max: float = 10.0
    method: str = "rkf45"
    eps: float = 0.01
    seed: int = 42
    radius: float = 4.0
    dx: float = 0.125
    tau: float = 2.0
    a: float = 0.0
    out: str = None


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):   # before int: bool is an int subclass
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2)


def _write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".solitonlab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(report: dict, out: str = None):
    text = _dump_json(report)
    if out:
        _write_atomic(out, text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# algebra input
# ---------------------------------------------------------------------------

def parse_algebra_file(path: str):
    """Load an AlgebraFile; returns (LieAlgebra, metric, name)."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or "dim" not in raw:
        raise InvalidInput(f"{path}: expected an object with a 'dim' field")
    n = raw["dim"]
    if not isinstance(n, int) or n < 1:
        raise InvalidInput(f"{path}: dim must be a positive integer")
    entries = []
    for b in raw.get("brackets", []):
        try:
            i, j, k, c = b["i"], b["j"], b["k"], b["c"]
        except (TypeError, KeyError):
            raise InvalidInput(f"{path}: bracket entries need i, j, k, c") from None
        for label, v in (("i", i), ("j", j), ("k", k)):
            if not isinstance(v, int) or not 1 <= v <= n:
                raise InvalidInput(f"{path}: bracket index {label}={v} out of range 1..{n}")
        if not i < j:
            raise InvalidInput(f"{path}: bracket indices must satisfy i < j, got ({i}, {j})")
        entries.append((i - 1, j - 1, k - 1, float(c)))
    L = LieAlgebra(n, entries)
    metric = raw.get("metric")
    if metric is None:
        g = np.eye(n)
    else:
        g = np.asarray(metric, dtype=float)
        if g.shape != (n, n):
            raise InvalidInput(f"{path}: metric must be {n}x{n}")
        from .leftinv import check_metric
        check_metric(g)
    name = os.path.splitext(os.path.basename(path))[0]
    return L, g, name


def resolve_target(target: str):
    """A positional argument is a file path if it exists, else a catalog name."""
    if os.path.exists(target):
        return parse_algebra_file(target)
    entry = catalog.get(target)
    return entry.algebra, np.asarray(entry.metric), entry.name


def export_algebra(entry: catalog.CatalogEntry) -> dict:
    brackets = [{"i": int(i) + 1, "j": int(j) + 1, "k": int(k) + 1, "c": float(c)}
                for i, j, k, c in entry.algebra.entries]
    return {"dim": entry.algebra.n, "brackets": brackets,
            "metric": _jsonable(np.asarray(entry.metric))}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    L, g, name = resolve_target(args.target)
    report = validate(L, tol=args.tol)
    _emit({"name": name, "dim": L.n,
           "jacobi_residual": report.jacobi_residual,
           "antisymmetry_residual": report.antisymmetry_residual,
           "tol": report.tol, "passed": report.passed}, args.out)
    return 0 if report.passed else 1


def cmd_soliton(args) -> int:
    from .soliton import verify_soliton
    L, g, name = resolve_target(args.target)
    cert = solve_soliton(L, g)
    ver = verify_soliton(L, g, cert.lam, cert.D, tol=max(args.tol, 1e-12))
    _emit({"name": name, "dim": L.n, "lambda": cert.lam,
           "derivation": cert.D, "residual": cert.residual,
           "class": cert.classification,
           "soliton_residual": ver.soliton_residual,
           "derivation_residual": ver.derivation_residual,
           "verified": ver.passed}, args.out)
    return 0 if cert.classification != "none" and ver.passed else 1


def cmd_spectrum(args) -> int:
    from .stability import stability_operator
    L, g, name = resolve_target(args.target)
    cert = solve_soliton(L, g)
    if cert.classification == "none":
        print(f"error: {name} is not an algebraic soliton; no linearization point",
              file=sys.stderr)
        return 1
    rep = stability_operator(L, g, cert)
    _emit({"name": name, "dim": L.n, "lambda": cert.lam,
           "class": cert.classification,
           "classification": rep.classification,
           "epsilon": rep.epsilon,
           "quad_bound": rep.quad_bound,
           "quad_bound_raw": rep.quad_bound_raw,
           "spectrum": rep.spectrum,
           "gauge_dim": rep.gauge_dim,
           "neutral_dim": rep.neutral_dim,
           "neutral_gauge_residual": rep.neutral_gauge_residual,
           "complement_bound": rep.complement_bound,
           "jac_spectrum": [[z.real, z.imag] for z in rep.jac_spectrum],
           "jac_decay_abscissa": rep.jac_decay_abscissa,
           "jac_neutral_dim": rep.jac_neutral_dim}, args.out)
    return 0


def _csv_text(traj, exact_devs=None) -> str:
    n = traj.g_ref.shape[0]
    cols = ["t"] + [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["dev"]
    if exact_devs is not None:
        cols.append("exact_dev")
    lines = [",".join(cols)]
    for idx, t in enumerate(traj.times):
        row = [_fmt(t)]
        row += [_fmt(v) for v in traj.metrics[idx].ravel()]
        row.append(_fmt(traj.deviations[idx]))
        if exact_devs is not None:
            row.append(_fmt(exact_devs[idx]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_flow(args) -> int:
    from .flow import (fit_decay_rate, integrate, perturb, rhs_normalized,
                       rhs_unnormalized)
    L, g0, name = resolve_target(args.target)
    cert = solve_soliton(L, g0)
    is_soliton = cert.classification != "none"
    if args.mode == "normalized" and not is_soliton:
        print(f"error: {name} is not an algebraic soliton; the normalized flow "
              "has no stationary point here", file=sys.stderr)
        return 1

    g_init = perturb(g0, args.perturb, args.seed) if args.perturb else g0.copy()
    if args.mode == "normalized":
        rhs = lambda g: rhs_normalized(L, g, cert)
    else:
        rhs = lambda g: rhs_unnormalized(L, g)
    traj = integrate(rhs, g_init, args.t_max, dt=args.dt, method=args.method,
                     atol=args.tol, rtol=args.tol, g_ref=g0)
    traj.meta.update({"name": name, "mode": args.mode, "seed": args.seed,
                      "eps": args.perturb})

    exact_devs = None
    if args.mode == "unnormalized" and is_soliton and args.perturb == 0:
        exact_devs = []
        for t, gt in zip(traj.times, traj.metrics):
            ge = exact_unnormalized_solution(g0, cert, t)
            exact_devs.append(float(np.linalg.norm(gt - ge)))

    fit = None
    if args.mode == "normalized" and args.perturb:
        # The perturbed flow relaxes to a (possibly gauge-shifted) soliton, so
        # the decay fit must reference the trajectory's own limit, not g0.
        g_inf = traj.metrics[-1]
        dev_lim = np.linalg.norm(traj.metrics - g_inf, axis=(1, 2))
        floor = max(1e-6 * float(np.linalg.norm(g0)), 50.0 * args.tol)
        above = np.nonzero(dev_lim >= floor)[0]
        if above.size >= 3:
            t2 = float(traj.times[above[-1]])
            res = fit_decay_rate(traj, g_ref=g_inf, window=(0.5 * t2, t2))
            # Refit away from t_max: the reference point itself sits on the
            # trajectory, so the last few e-folds before it read too steep.
            # Any roughly-exponential first pass is good enough to place the
            # clean window.
            if res.omega > 0 and res.r_squared > 0.5:
                t2 = min(t2, args.t_max - 4.0 / res.omega)
                t1 = max(0.0, t2 - 5.0 / res.omega)
                if t2 > t1:
                    res = fit_decay_rate(traj, g_ref=g_inf, window=(t1, t2))
        else:
            res = fit_decay_rate(traj, g_ref=g_inf)
        fit = {"C": res.C, "omega": res.omega, "r_squared": res.r_squared,
               "window": list(res.window), "n_points": res.n_points,
               "ok": res.ok, "reference": "trajectory limit"}

    csv_path = args.out or f"{name}_{args.mode}.csv"
    _write_atomic(csv_path, _csv_text(traj, exact_devs))
    report = {"name": name, "dim": L.n, "mode": args.mode,
              "method": args.method, "dt": args.dt, "t_max": args.t_max,
              "eps": args.perturb, "seed": args.seed,
              "lambda": cert.lam if is_soliton else None,
              "class": cert.classification, "steps": len(traj.times),
              "final_dev": traj.deviations[-1], "fit": fit, "csv": csv_path}
    json_path = os.path.splitext(csv_path)[0] + ".json"
    _write_atomic(json_path, _dump_json(report) + "\n")
    print(_dump_json(report))
    return 0


def cmd_rayleigh(args) -> int:
    from .coordfield import (GridSpec, chart_metric, curvature_fields,
                             probe_tensor_suite, rayleigh_quotient)
    cm = chart_metric(args.target)
    grid = GridSpec(args.radius, args.dx)
    if args.count < 1:
        raise InvalidInput("probe suite must contain at least one tensor")
    fields = curvature_fields(cm, grid.points())
    suite = probe_tensor_suite(cm, grid, count=args.count, seed=args.seed)
    quotients = [rayleigh_quotient(cm, cm.lam, cm.d, h, grid, _fields=fields)
                 for h in suite]
    _emit({"chart": cm.name, "lambda": cm.lam, "count": args.count,
           "seed": args.seed,
           "grid": {"radius": grid.radius, "dx": grid.dx, "npts": grid.npts},
           "quotients": quotients, "max": max(quotients)}, args.out)
    return 0 if max(quotients) < 0 else 1


def cmd_weights(args) -> int:
    from .coordfield import WeightSpec, summability_check
    w = WeightSpec(a=args.a, n=args.dim, tau=args.tau)
    res = summability_check(w, N_max=args.nmax)
    ps = res["partial_sums"]
    idx = np.unique(np.clip(
        np.round(np.geomspace(1, len(ps), num=min(40, len(ps)))).astype(int) - 1,
        0, len(ps) - 1))
    checkpoints = [[int(i + 2), float(ps[i])] for i in idx]
    _emit({"a": res["a"], "n": res["n"], "tau": res["tau"],
           "N_max": res["N_max"], "partial_sums": checkpoints,
           "sum": float(ps[-1]), "tail_bound": res["tail_bound"],
           "bound": res["bound"], "converged": res["converged"]}, args.out)
    return 0 if res["converged"] else 1


def cmd_catalog(args) -> int:
    if args.target:
        entry = catalog.get(args.target)
        doc = export_algebra(entry)
        text = _dump_json(doc)
        if args.out:
            _write_atomic(args.out, text + "\n")
        print(text)
        return 0
    rows = []
    for entry in catalog.entries():
        rows.append({"name": entry.name, "dim": entry.algebra.n,
                     "lambda": entry.expected.lam,
                     "class": entry.expected.classification,
                     "chart": entry.chart, "note": entry.note})
    _emit({"entries": rows}, args.out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="solitonlab",
        description="numerical laboratory for algebraic Ricci solitons on "
                    "solvable Lie groups")
    sub = p.add_subparsers(dest="command", required=True)
    cfg = RunConfig()

    def common(sp, grid=False):
        sp.add_argument("--tol", type=float, default=cfg.tol)
        sp.add_argument("--seed", type=int, default=cfg.seed)
        sp.add_argument("--out", default=None)
        if grid:
            sp.add_argument("--radius", type=float, default=cfg.radius)
            sp.add_argument("--dx", type=float, default=cfg.dx)

    sp = sub.add_parser("validate", help="check antisymmetry and Jacobi")
    sp.add_argument("target")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("soliton", help="solve and verify the soliton equation")
    sp.add_argument("target")
    common(sp)
    sp.set_defaults(func=cmd_soliton)

    sp = sub.add_parser("spectrum", help="linear stability spectra at a soliton")
    sp.add_argument("target")
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("flow", help="integrate the flow; CSV + fit report")
    sp.add_argument("target")
    sp.add_argument("--mode", choices=("normalized", "unnormalized"),
                    default="normalized")
    sp.add_argument("--dt", type=float, default=cfg.dt)
    sp.add_argument("--t-max", type=float, default=cfg.t_max)
    sp.add_argument("--method", choices=("rk4", "rkf45"), default=cfg.method)
    sp.add_argument("--perturb", type=float, default=0.0)
    common(sp)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("rayleigh", help="grid Rayleigh quotients of L")
    sp.add_argument("target", help="chart model: nil3, sol3 or hyp3")
    sp.add_argument("--count", type=int, default=20)
    common(sp, grid=True)
    sp.set_defaults(func=cmd_rayleigh)

    sp = sub.add_parser("weights", help="weight summability check")
    sp.add_argument("--a", type=float, default=cfg.a)
    sp.add_argument("--tau", type=float, default=cfg.tau)
    sp.add_argument("--dim", type=int, default=3)
    sp.add_argument("--nmax", type=int, default=250_000)
    common(sp)
    sp.set_defaults(func=cmd_weights)

    sp = sub.add_parser("catalog", help="list entries or export one as JSON")
    sp.add_argument("target", nargs="?", default=None)
    common(sp)
    sp.set_defaults(func=cmd_catalog)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (SingularityReached, StiffnessError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
