"""Quadrature audits of integral identities for compact spacelike immersions.

Each audit integrates a pointwise expression built from shape operators
(exact route), the one form (central differences) and one extra level of
central differences where a derivative of a computed scalar is needed.
Results carry the quadrature resolution, the bound used and, for the
identity checks, a three-level convergence table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import scalar_curvature
from .embedding import (
    FD_STEP,
    LightconeFrame,
    RescaledFrame,
    ScaledFrame,
    SphereGraph,
    _mdot,
    _shift,
    decompose,
    default_frame,
    local_data,
    shape_operators,
    volume_elements,
)
from .minkowski import causal_type

# tol(N) = TOL_C * N^-4 + TOL_FLOOR; TOL_C makes tol(32) about 1e-6
TOL_C = 1.0
TOL_FLOOR = 1e-9


def tolerance(N, C=TOL_C, floor=TOL_FLOOR):
    return C * float(N) ** -4 + floor


class PreconditionError(ValueError):
    pass


@dataclass
class AuditResult:
    name: str
    value: float
    bound: float
    resolution: int
    passed: bool
    kind: str = "identity"
    terms: dict = field(default_factory=dict)
    convergence: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "bound": self.bound,
            "resolution": self.resolution,
            "pass": self.passed,
            "kind": self.kind,
            "terms": self.terms,
            "convergence": self.convergence,
            **self.extra,
        }


def _require_compact(im):
    if not im.compact:
        raise PreconditionError(f"{im.name} is not compact")


def _trace_eta_gradient(im, frame, P, h=FD_STEP):
    """Chart gradient of ``trace A_eta`` (exact route) by central differences."""
    cols = []
    for i in range(im.n):
        vals = []
        for s in (h, -h):
            U = _shift(im.n, i, s)(P)
            loc = local_data(im, P, U)
            _, eta = frame.vectors(im, P, U, loc)
            low = _mdot(loc.d2, eta[:, None, None, :])
            vals.append(np.einsum("nij,nij->n", loc.ginv, low))
        cols.append((vals[0] - vals[1]) / (2 * h))
    return np.stack(cols, axis=1)


def minkowski_integrand(im, frame, a, P, h=FD_STEP):
    """The five summands of the divergence identity at chart points ``P``."""
    a = np.asarray(a, dtype=float)
    sh = shape_operators(im, frame, P, route="exact", h=h)
    n = im.n
    top, _ = decompose(sh, a)
    Ae, Ax, al = sh.A_eta, sh.A_xi, sh.alpha
    tre, trx = sh.trace_eta, sh.trace_xi
    grad_tr = _trace_eta_gradient(im, frame, P, h)
    Ae_top = np.einsum("nki,ni->nk", Ae, top)
    return {
        "a_top_trace": (n - 1) / n * np.einsum("ni,ni->n", top, grad_tr),
        "xi_umbilicity": _mdot(a, sh.xi) * (np.einsum("nij,nji->n", Ae, Ae) - tre**2 / n),
        "eta_mixed": _mdot(a, sh.eta) * (np.einsum("nij,nji->n", Ae, Ax) - tre * trx / n),
        "alpha_A_eta": -np.einsum("nk,nk->n", al, Ae_top),
        "alpha_trace": np.einsum("nk,nk->n", al, top) * tre,
    }


def _integrate_terms(im, frame, a, N, h):
    P, dV, rule = volume_elements(im, N)
    terms = minkowski_integrand(im, frame, a, P, h)
    parts = {k: float(np.sum(dV * v)) for k, v in terms.items()}
    total = float(np.sum(dV * sum(terms.values())))
    return total, parts, rule


def convergence_table(fn, N, levels=3):
    """``[(N_j, value_j)]`` for ``N_j = N / 2^(levels-1-j)`` plus observed orders."""
    rows = []
    for j in range(levels):
        Nj = max(4, int(N) >> (levels - 1 - j))
        rows.append({"N": Nj, "value": float(fn(Nj))})
    for prev, cur in zip(rows, rows[1:]):
        e0, e1 = abs(prev["value"]), abs(cur["value"])
        cur["order"] = math.log2(e0 / e1) if e0 > 0 and e1 > 0 else None
    return rows


def minkowski_formula_audit(im, frame=None, a=None, N=64, bound=None, h=FD_STEP, table=True):
    """Integrate the divergence identity with five terms; should vanish."""
    _require_compact(im)
    frame = default_frame(im) if frame is None else frame
    a = np.asarray(a if a is not None else np.eye(im.dim)[0], dtype=float)
    total, parts, rule = _integrate_terms(im, frame, a, N, h)
    bound = tolerance(N) if bound is None else bound
    conv = convergence_table(lambda M: _integrate_terms(im, frame, a, M, h)[0], N) if table else []
    return AuditResult(
        "minkowski",
        total,
        bound,
        N,
        abs(total) <= bound,
        terms=parts,
        convergence=conv,
        extra={"immersion": im.name, "frame": frame.name, "a": a.tolist(), "quadrature": rule.descriptor},
    )


def alpha_rescaling_check(im, frame, phi, P, h=FD_STEP):
    """Max g-norm of ``alpha_bar - (alpha - d log phi)`` over chart points ``P``."""
    rf = phi if isinstance(phi, RescaledFrame) else RescaledFrame(frame, phi)
    base = shape_operators(im, rf.base, P, route="exact", h=h)
    bar = shape_operators(im, rf, P, route="exact", h=h)
    dlog = np.stack(
        [
            (np.log(rf.values(im, P, _shift(im.n, i, h)(P))) - np.log(rf.values(im, P, _shift(im.n, i, -h)(P)))) / (2 * h)
            for i in range(im.n)
        ],
        axis=1,
    )
    diff = bar.alpha - (base.alpha - dlog)
    return float(np.max(np.sqrt(np.einsum("ni,nij,nj->n", diff, base.loc.ginv, diff))))


def _parallel_frames(im):
    """``xi0 = -xi/n``, ``xi1 = -n eta`` on a light-cone graph: traces ``1`` and ``n^2 <H,H>/2``."""
    return ScaledFrame(LightconeFrame(), -1.0 / im.n)


def _check_constant_H(im, P, tol=1e-6):
    sh = shape_operators(im, LightconeFrame(), P, route="exact")
    hh = sh.H_sq
    spread = float(np.max(hh) - np.min(hh))
    if spread > tol * max(1.0, float(np.max(np.abs(hh)))):
        raise PreconditionError(f"<H,H> is not constant (spread {spread:.3e}); H is not parallel")
    return float(np.mean(hh)), spread


def parallel_H_audit(im, a=None, N=32, bound=None, h=FD_STEP):
    """Both integrals of the parallel-H specialization; each should vanish."""
    _require_compact(im)
    if not im.lightcone:
        raise PreconditionError("parallel_H_audit expects a light-cone graph")
    P, dV, rule = volume_elements(im, N)
    hh, spread = _check_constant_H(im, P)
    a = np.asarray(a if a is not None else np.eye(im.dim)[0], dtype=float)
    sh = shape_operators(im, _parallel_frames(im), P, route="exact", h=h)
    n = im.n
    ops = [sh.A_xi, sh.A_eta]
    vecs = [sh.xi, sh.eta]
    values = []
    for i in range(2):
        j = 1 - i
        Ai, Aj = ops[i], ops[j]
        tri, trj = np.einsum("nii->n", Ai), np.einsum("nii->n", Aj)
        integrand = _mdot(a, vecs[i]) * (np.einsum("nij,nji->n", Aj, Aj) - trj**2 / n) + _mdot(a, vecs[j]) * (
            np.einsum("nij,nji->n", Aj, Ai) - trj * tri / n
        )
        values.append(float(np.sum(dV * integrand)))
    bound = tolerance(N) if bound is None else bound
    worst = max(abs(v) for v in values)
    return AuditResult(
        "parallel",
        worst,
        bound,
        N,
        worst <= bound,
        terms={"i=0": values[0], "i=1": values[1]},
        extra={"immersion": im.name, "a": a.tolist(), "H_sq": hh, "H_sq_spread": spread, "quadrature": rule.descriptor},
    )


def inequality_audit(im, a=None, N=32, bound=None, h=FD_STEP):
    """Integral of ``<a, xi0 - xi1> (n(n-1)<H,H> - S)`` (expected >= 0; = 0 on graphs).

    ``a`` must be timelike. If ``<a, xi0> > 0`` fails everywhere the opposite
    vector is used instead; the sign actually used is reported.
    """
    _require_compact(im)
    if not im.lightcone:
        raise PreconditionError("inequality_audit expects a light-cone graph")
    a = np.asarray(a if a is not None else np.eye(im.dim)[0], dtype=float)
    if causal_type(a) != "timelike":
        raise PreconditionError("a must be timelike")
    P, dV, rule = volume_elements(im, N)
    hh, spread = _check_constant_H(im, P)
    sh = shape_operators(im, _parallel_frames(im), P, route="exact", h=h)
    sign = 1.0
    if not np.all(_mdot(a, sh.xi) > 0):
        if np.all(_mdot(-a, sh.xi) > 0):
            sign = -1.0
        else:
            raise PreconditionError("<a, xi0> changes sign")
    a = sign * a
    n = im.n
    H_sq = 2.0 * sh.trace_xi * sh.trace_eta / n**2
    if isinstance(im, SphereGraph):
        S = scalar_curvature(im.graph_field, im.domain_points(P), n)
    else:
        S = n * n * H_sq - sh.II_sq()
    gap = n * (n - 1) * H_sq - S
    integrand = _mdot(a, sh.xi - sh.eta) * gap
    value = float(np.sum(dV * integrand))
    bound = tolerance(N) if bound is None else bound
    return AuditResult(
        "inequality",
        value,
        bound,
        N,
        value >= -bound,
        kind="inequality",
        extra={
            "immersion": im.name,
            "a": a.tolist(),
            "a_sign": sign,
            "H_sq": hh,
            "max_pointwise_gap": float(np.max(np.abs(gap))),
            "max_integrand": float(np.max(np.abs(integrand))),
            "max_umbilicity_defect": float(np.max(np.abs(sh.umbilicity_defect))),
            "quadrature": rule.descriptor,
        },
    )


def divergence_tangent(im, a, P, h=FD_STEP):
    """``div(a_top)`` by central differences of ``sqrt(det g) a_top^i``."""
    a = np.asarray(a, dtype=float)
    loc0 = local_data(im, P)
    out = np.zeros(P.shape[0])
    for i in range(im.n):
        vals = []
        for s in (h, -h):
            loc = local_data(im, P, _shift(im.n, i, s)(P))
            top = np.einsum("nij,nj->ni", loc.ginv, _mdot(loc.d1, a))
            vals.append(loc.sqrt_det * top[:, i])
        out += (vals[0] - vals[1]) / (2 * h)
    return out / loc0.sqrt_det


def beltrami_audit(im, frame=None, a=None, N=32, points=None, h=FD_STEP, pointwise_bound=1e-5, bound=None):
    """``div(a_top) = <a,xi> tr A_eta + <a,eta> tr A_xi`` pointwise, and its integral."""
    _require_compact(im)
    frame = default_frame(im) if frame is None else frame
    a = np.asarray(a if a is not None else np.eye(im.dim)[0], dtype=float)
    P, dV, rule = volume_elements(im, N)
    div = divergence_tangent(im, a, P, h)
    sh = shape_operators(im, frame, P, route="exact", h=h)
    rhs = _mdot(a, sh.xi) * sh.trace_eta + _mdot(a, sh.eta) * sh.trace_xi
    res = float(np.max(np.abs(div - rhs)))
    if points is not None:
        Q = np.atleast_2d(points)
        sq = shape_operators(im, frame, Q, route="exact", h=h)
        r2 = _mdot(a, sq.xi) * sq.trace_eta + _mdot(a, sq.eta) * sq.trace_xi
        res = max(res, float(np.max(np.abs(divergence_tangent(im, a, Q, h) - r2))))
    integral = float(np.sum(dV * div))
    bound = tolerance(N) if bound is None else bound
    return AuditResult(
        "beltrami",
        integral,
        bound,
        N,
        res < pointwise_bound and abs(integral) <= bound,
        kind="pointwise",
        terms={"integral_div": integral, "integral_rhs": float(np.sum(dV * rhs))},
        extra={
            "immersion": im.name,
            "frame": frame.name,
            "a": a.tolist(),
            "max_pointwise_residual": res,
            "pointwise_bound": pointwise_bound,
            "quadrature": rule.descriptor,
        },
    )
