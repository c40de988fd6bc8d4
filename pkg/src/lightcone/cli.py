"""Command-line front end.

Every subcommand prints one JSON report with the keys ``command``,
``params``, ``results``, ``quadrature``, ``tolerances`` and ``pass`` (plus
``meta`` with the wall time unless ``--no-meta`` is given). Exit status is
0 when the report passes, 1 when it fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .audit import beltrami_audit, inequality_audit, minkowski_formula_audit, parallel_H_audit
from .conformal import ANALYTIC_TOL, FD_TOL, conformal_report
from .embedding import (
    CATALOG,
    HyperplaneFrame,
    catalog,
    default_frame,
    graph_immersion,
    invariants_report,
    rescaled_frame,
)
from .fields import SpectralField, as_field
from .minkowski import minkowski_dot
from .solver import (
    SolverConfig,
    classify,
    independent_residual,
    random_initial_field,
    solve_E,
    sweep,
)
from .sphere import pole, random_points, sphere_rule

SOLVE_CHECK_TOL = 1e-9


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def _floats(text, what):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"--{what} expects a comma separated list of numbers, got {text!r}") from None


def _timelike_unit(v):
    """Normalize a past-pointing timelike vector to <v,v> = -1."""
    q = float(minkowski_dot(v, v))
    if not q < 0 or not v[0] < 0:
        raise UsageError("--v must be timelike with v0 < 0")
    return v / math.sqrt(-q)


def _field(args):
    if getattr(args, "coeffs", None):
        return SpectralField.from_file(args.coeffs)
    if args.field is None:
        raise UsageError("--field (or --coeffs) is required")
    return as_field(args.field, args.n)


def _immersion(args):
    if args.example:
        params = {"n": args.n}
        if args.v is not None:
            params["v"] = _timelike_unit(_floats(args.v, "v"))
        for key in ("k", "r", "R", "rho"):
            val = getattr(args, key, None)
            if val is not None:
                params[key] = val
        if args.example in ("obata-graph", "snvr") and "v" not in params:
            raise UsageError(f"--example {args.example} needs --v")
        return catalog(args.example, **params)
    return graph_immersion(_field(args), args.n)


def _points(args, im=None, n=None):
    n = args.n if n is None else n
    spec = args.points
    rng = np.random.default_rng(args.seed)
    if spec == "poles":
        return np.stack([pole(n), pole(n, south=True)])
    if spec == "random":
        if im is not None:
            return im.sample(args.npoints, rng)
        return random_points(n, args.npoints, rng)
    try:
        return np.array([[float(t) for t in p.split(",")] for p in spec.split(";")])
    except ValueError:
        raise UsageError("--points is 'poles', 'random' or 'a,b,c;d,e,f'") from None


def _vector_a(args, dim):
    if args.a is None:
        a = np.zeros(dim)
        a[0] = 1.0
        return a
    a = _floats(args.a, "a")
    if a.size != dim:
        raise UsageError(f"--a needs {dim} components")
    return a


def _frame(args, im):
    if args.frame == "parallel":
        return HyperplaneFrame()
    base = default_frame(im)
    if args.phi:
        return rescaled_frame(base, args.phi)
    return base


# ---------------------------------------------------------------- report output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable
        return x if math.isfinite(x) else repr(x)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, json.dumps(obj) if isinstance(obj, list) else obj


def render(report, fmt="json"):
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, val in _flatten(report):
        w.writerow([key, repr(val) if isinstance(val, float) else val])
    return buf.getvalue()


def _params(args):
    skip = {"func", "out", "format", "quiet", "no_meta", "group", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------- commands


def cmd_field_eval(args):
    f = _field(args)
    X = _points(args, n=f.n)
    vals = f(X)
    lap = f.laplacian(X, method=args.method)
    grad = f.gradient(X, method="analytic" if args.method == "spectral" else args.method)
    ok = bool(np.all(np.isfinite(vals)) and np.all(np.isfinite(lap)))
    res = {"field": f.name, "points": X, "value": vals, "gradient": grad, "laplacian": lap}
    return res, None, {"derivatives": FD_TOL if args.method == "fd" else ANALYTIC_TOL}, ok


def cmd_conformal_report(args):
    f = _field(args)
    X = _points(args, n=f.n)
    rule = sphere_rule(f.n, args.grid) if args.grid else None
    rep = conformal_report(f, X, k=args.k, n=f.n, method=args.method, rule=rule)
    scale = max(1.0, float(np.max(np.abs(rep.scalar_curvature))))
    ok = rep.identity_defect <= rep.tolerance * scale
    quad = None if rule is None else rule.descriptor
    return rep.to_dict(), quad, {"identity": rep.tolerance, "scale": scale}, ok


def cmd_embed_report(args):
    im = _immersion(args)
    P = _points(args, im=im, n=im.n)
    route = "fd" if args.method == "fd" else "exact"
    shape, inv = invariants_report(im, P, route=route)
    tol = FD_TOL if route == "fd" else ANALYTIC_TOL
    checks = {"self_adjoint": float(np.max(inv["self_adjoint_defect"]))}
    for key in ("H_sq_psi0", "H_sq_intrinsic"):
        if key in inv:
            checks[key] = float(np.max(np.abs(inv[key] - inv["H_sq_traces"])))
    if "S_intrinsic" in inv:
        checks["S_gauss"] = float(np.max(np.abs(inv["S_gauss"] - inv["S_intrinsic"])))
    ok = all(v <= tol * max(1.0, float(np.max(np.abs(inv["H_sq_traces"])))) for v in checks.values())
    res = {"immersion": im.name, "frame": default_frame(im).name, "route": route, "points": P, "checks": checks}
    res.update(inv)
    res["A_xi"] = shape.A_xi
    res["A_eta"] = shape.A_eta
    return res, None, {"checks": tol}, ok


def cmd_audit(args):
    im = _immersion(args)
    a = _vector_a(args, im.dim)
    N = args.grid
    if args.group == "minkowski":
        res = minkowski_formula_audit(im, _frame(args, im), a, N=N, table=not args.no_table)
    elif args.group == "parallel":
        res = parallel_H_audit(im, a, N=N)
    elif args.group == "inequality":
        res = inequality_audit(im, a, N=N)
    else:
        res = beltrami_audit(im, _frame(args, im), a, N=N)
    d = res.to_dict()
    quad = d.pop("quadrature", None)
    tol = {"integral": res.bound}
    if "pointwise_bound" in d:
        tol["pointwise"] = d["pointwise_bound"]
    return d, quad, tol, res.passed


def _solve_report(res, k, seed):
    f = res.field
    out = {"diagnostics": res.diagnostics()}
    out["diagnostics"].pop("config", None)
    ok = res.converged
    if res.converged:
        ind = independent_residual(f, k, np.random.default_rng(seed))
        cls = classify(f)
        out["independent_residual"] = ind
        out["classification"] = cls.to_dict()
        ok = ok and ind < SOLVE_CHECK_TOL and cls.in_family
    return out, ok


def cmd_solve(args):
    cfg = SolverConfig(k=args.k, lmax=args.lmax, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    if args.field is not None or args.coeffs:
        f0 = _field(args)
    else:
        f0 = random_initial_field(args.seed, args.lmax, args.amplitude)
    res = solve_E(cfg, f0)
    out, ok = _solve_report(res, args.k, args.seed)
    if args.save_coeffs:
        res.field.to_file(args.save_coeffs)
        out["coeffs_file"] = args.save_coeffs
    grid = cfg.grid()
    quad = {"kind": "gauss-legendre x uniform", "nlat": grid.nlat, "nlon": grid.nlon, "lmax": cfg.lmax}
    return out, quad, {"residual": args.tol, "independent": SOLVE_CHECK_TOL, "rho": 1e-6}, ok


def cmd_classify(args):
    f = _field(args)
    rule = sphere_rule(f.n, args.grid)
    cls = classify(f, rule)
    return cls.to_dict(), rule.descriptor, {"rho": 1e-6}, cls.in_family


def cmd_sweep(args):
    ks = [float(x) for x in _floats(args.k, "k")]
    recs = sweep(ks, range(args.seeds), lmax=args.lmax, amplitude=args.amplitude, tol=args.tol, max_iter=args.max_iter)
    rows = []
    ok = True
    summary = {}
    for r in recs:
        row = {
            "seed": r.seed,
            "k": r.k,
            "converged": r.converged,
            "iterations": r.iterations,
            "residual_max": r.residual_max,
            "independent_residual": r.independent_residual,
            "classification": r.classification,
            "message": r.message,
        }
        if r.converged:
            c = r.classification
            good = (
                r.independent_residual < SOLVE_CHECK_TOL
                and c["in_family"]
                and abs(c["k_hat"] - r.k) < 1e-6
            )
            row["in_family_check"] = good
            ok = ok and good
        rows.append(row)
        s = summary.setdefault(repr(r.k), {"converged": 0, "runs": 0})
        s["runs"] += 1
        s["converged"] += int(r.converged)
    res = {"summary": summary, "runs": rows}
    return res, None, {"independent": SOLVE_CHECK_TOL, "rho": 1e-6, "k_hat": 1e-6}, ok


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, points=False, field=True, example=False):
    p.add_argument("--n", type=int, default=2, help="sphere dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--quiet", action="store_true", help="no summary on stderr")
    p.add_argument("--no-meta", action="store_true", help="omit wall time (byte-identical output)")
    if field:
        p.add_argument("--field", help="expression in x1..x{n+1}")
        p.add_argument("--coeffs", help="spectral coefficient file (n = 2)")
    if points:
        p.add_argument("--points", default="random", help="'poles', 'random' or 'a,b,c;d,e,f'")
        p.add_argument("--npoints", type=int, default=8)
        p.add_argument("--method", choices=("analytic", "fd", "spectral"), default="analytic")
    if example:
        p.add_argument("--example", choices=CATALOG)
        p.add_argument("--v", help="timelike vector, comma list (normalized to <v,v> = -1)")
        p.add_argument("--r", type=float)
        p.add_argument("--R", type=float)
        p.add_argument("--rho", type=float)


def build_parser():
    parser = _Parser(prog="lightcone", description="Light-cone geometry, conformal metrics and Obata-type solutions.")
    parser.add_argument("--version", action="version", version=f"lightcone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fld = sub.add_parser("field", help="evaluate a scalar field on the sphere").add_subparsers(dest="group", required=True, parser_class=_Parser)
    p = fld.add_parser("eval", help="values and derivatives of a field")
    _common(p, points=True)
    p.set_defaults(func=cmd_field_eval)

    conf = sub.add_parser("conformal", help="curvature of the conformal metric").add_subparsers(dest="group", required=True, parser_class=_Parser)
    p = conf.add_parser("report", help="S, <H,H> and the constant-curvature residual at points")
    _common(p, points=True)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=0, help="also integrate the volume on this rule")
    p.set_defaults(func=cmd_conformal_report)

    emb = sub.add_parser("embed", help="light-cone immersions and their invariants").add_subparsers(dest="group", required=True, parser_class=_Parser)
    p = emb.add_parser("report", help="shape operators and curvature invariants")
    _common(p, points=True, example=True)
    p.add_argument("--k", type=float)
    p.set_defaults(func=cmd_embed_report)

    aud = sub.add_parser("audit", help="integral formulas by quadrature").add_subparsers(dest="group", required=True, parser_class=_Parser)
    for name in ("minkowski", "parallel", "inequality", "beltrami"):
        p = aud.add_parser(name, help=f"{name} integral audit")
        _common(p, example=True)
        p.add_argument("--k", type=float)
        p.add_argument("--a", help="constant vector of L^{n+2}, comma list")
        p.add_argument("--grid", type=int, default=64, help="quadrature resolution")
        p.add_argument("--frame", choices=("default", "parallel"), default="default")
        p.add_argument("--phi", help="rescale the frame by phi(u, w) (or phi(x...) on graphs)")
        p.add_argument("--no-table", action="store_true", help="skip the convergence table")
        p.set_defaults(func=cmd_audit)

    p = sub.add_parser("solve", help="solve the constant-curvature equation on S^2 and classify the result")
    _common(p)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--lmax", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--amplitude", type=float, default=0.5, help="of the random initial field")
    p.add_argument("--save-coeffs", help="write the solution coefficients to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classify", help="fit a field against the Obata family")
    _common(p)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="solve from a batch of random seeds")
    _common(p, field=False)
    p.add_argument("--k", default="0.5,1,4", help="comma list")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--lmax", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv=None, stdout=None, stderr=None):
    """Run one command line; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    command = " ".join(x for x in (args.command, getattr(args, "group", None)) if x)
    t0 = time.perf_counter()
    try:
        results, quad, tols, ok = args.func(args)
    except (UsageError, ValueError) as exc:
        # bad parameters (parse errors, invalid vectors, preconditions)
        print(f"lightcone {command}: error: {exc}", file=stderr)
        return 2
    report = {
        "command": command,
        "params": _params(args),
        "results": results,
        "quadrature": quad,
        "tolerances": tols,
        "pass": bool(ok),
    }
    if not args.no_meta:
        report["meta"] = {"wall_time": time.perf_counter() - t0, "version": __version__}
    text = render(_clean(report), args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if not args.quiet:
        print(f"{command}: {'pass' if ok else 'FAIL'}", file=stderr)
    return 0 if ok else 1


def main(argv=None):
    sys.exit(run(argv))
