"""Spacelike immersions into L^{n+2}, null normal frames and shape operators.

An :class:`Immersion` exposes second-order jets of its map in local chart
coordinates. Graphs over S^n use a gnomonic chart centred at each sample
point, so the sphere has no chart poles here; parametric examples use their
own rectangle coordinates. Everything is batched over sample points.

Conventions: ``<xi, eta> = 1``; shape operators are matrices ``A[k, i]`` of
the endomorphism in the coordinate basis (``A d_i = A[k, i] d_k``); the one
form is ``alpha(X) = <D_X xi, eta>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jet
from .conformal import mean_curvature_sq, scalar_curvature
from .expr import FieldExpression, parse_field
from .fields import ConstantField, ObataField, RotatedField, ScalarField, as_field
from .jet import Jet
from .minkowski import ObataParameters, minkowski_dot
from .sphere import gnomonic_jets, periodic_chart_rule, random_points, sphere_rule, tangent_basis

FD_STEP = 1e-5
LIGHTCONE_TOL = 1e-10


class ChartSingularity(ValueError):
    """The induced metric is degenerate at a sample point."""


class NotInLightCone(ValueError):
    pass


def fd_tolerance(h=FD_STEP):
    return max(1e-6, 100.0 * h * h)


def _mdot(a, b):
    """Minkowski product over the last axis, broadcasting freely."""
    return np.sum(a * b, axis=-1) - 2.0 * a[..., 0] * b[..., 0]


# ---------------------------------------------------------------- immersions


class Immersion:
    """Base class. Subclasses implement :meth:`local_jets` and sampling."""

    n = 2
    name = "immersion"
    lightcone = False
    compact = False

    @property
    def dim(self):
        return self.n + 2

    def local_jets(self, P, U=None):
        """Jets of the ``n + 2`` components seeded on local coordinates ``U``."""
        raise NotImplementedError

    def domain_points(self, P, U=None):
        raise NotImplementedError

    def sample(self, size, rng):
        raise NotImplementedError

    def quadrature(self, N):
        """Nodes and chart weights such that ``sum w sqrt(det g) F`` integrates F."""
        raise NotImplementedError

    def _zero(self, P):
        return np.zeros((np.shape(P)[0], self.n))

    def __call__(self, P):
        return np.stack([c.val for c in self.local_jets(P)], axis=1)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class SphereGraph(Immersion):
    """Light-cone graph ``x -> e^{f(Rx)} (1, Rx)`` over S^n (``R`` optional)."""

    lightcone = True
    compact = True

    def __init__(self, f, n=None, rotation=None, name=None):
        self.field = as_field(f, n or 2)
        self.n = self.field.n
        self.rotation = None if rotation is None else np.asarray(rotation, dtype=float)
        self.name = name or f"graph({self.field.name})"

    def domain_points(self, P, U=None):
        P = np.atleast_2d(P)
        if U is None:
            return P
        ys = gnomonic_jets(P, tangent_basis(P), U)
        return np.stack([y.val for y in ys], axis=1)

    def _rotate(self, ys):
        if self.rotation is None:
            return ys
        R = self.rotation
        return [sum((ys[b] * R[a, b] for b in range(len(ys)) if R[a, b] != 0.0), 0.0) for a in range(len(ys))]

    def local_jets(self, P, U=None):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        U = self._zero(P) if U is None else U
        ys = self._rotate(gnomonic_jets(P, tangent_basis(P), U))
        scale = jet.exp(self.field.jet_on(ys))
        return [scale] + [scale * y for y in ys]

    @property
    def graph_field(self):
        """The function ``f`` with ``psi = i_f`` composed with the rotation."""
        if self.rotation is None:
            return self.field
        return RotatedField(self.field, self.rotation)

    def sample(self, size, rng):
        return random_points(self.n, size, rng)

    def quadrature(self, N):
        rule = sphere_rule(self.n, N)
        return rule.nodes, rule.weights, rule


class ParametricImmersion(Immersion):
    """Immersion given by a map of chart coordinates on a rectangle.

    ``fn`` receives a list of ``n`` coordinate arrays or jets and returns the
    ``n + 2`` components.
    """

    def __init__(self, fn, box, name, n=2, lightcone=False, compact=False):
        self.fn = fn
        self.box = np.asarray(box, dtype=float)
        self.name = name
        self.n = n
        self.lightcone = lightcone
        self.compact = compact

    def domain_points(self, P, U=None):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return P if U is None else P + U

    def local_jets(self, P, U=None):
        P = self.domain_points(P, U)
        us = Jet.variables(P)
        out = []
        for c in self.fn(us):
            if not isinstance(c, Jet):
                c = Jet.constant(c, P.shape[0], self.n)
            out.append(c)
        return out

    def sample(self, size, rng):
        lo, hi = self.box[:, 0], self.box[:, 1]
        return lo + (hi - lo) * rng.uniform(size=(size, self.n))

    def quadrature(self, N):
        if not self.compact:
            raise ValueError(f"{self.name} is not compact; no global quadrature")
        lo = self.box[:, 0]
        rule = periodic_chart_rule(N, tuple(self.box[:, 1] - lo))
        return rule.nodes + lo, rule.weights, rule


# ---------------------------------------------------------------- catalog


def round_graph(n=2):
    return SphereGraph(ConstantField(0.0, n), name="round-graph")


def obata_graph(v, k=1.0):
    p = v if isinstance(v, ObataParameters) else ObataParameters(np.asarray(v, dtype=float), k)
    return SphereGraph(ObataField(p), name=f"obata-graph(v={p.v.tolist()}, k={p.k!r})")


def snvr(v, r):
    """The umbilical sphere ``{<x,x> = 0, <v,x> = r}`` as a graph of Obata(v, 1/r^2)."""
    p = v if isinstance(v, ObataParameters) else ObataParameters(np.asarray(v, dtype=float), 1.0)
    im = SphereGraph(ObataField(ObataParameters(p.v, 1.0 / (r * r))), name=f"snvr(v={p.v.tolist()}, r={r!r})")
    im.v = p.v
    im.r = float(r)
    return im


def flat_cylinder():
    def fn(c):
        x, y = c
        return [jet.cosh(x), jet.sinh(x), jet.cos(y), jet.sin(y)]

    return ParametricImmersion(fn, [[-2.0, 2.0], [0.0, 2 * math.pi]], "flat-cylinder", lightcone=True)


def poincare_halfplane():
    """``(1/x)(cosh x, sinh x, cos y, sin y)`` on ``x > 0``; Gauss curvature -1."""

    def fn(c):
        x, y = c
        s = jet.reciprocal(x)
        return [s * jet.cosh(x), s * jet.sinh(x), s * jet.cos(y), s * jet.sin(y)]

    return ParametricImmersion(fn, [[0.25, 3.0], [0.0, 2 * math.pi]], "poincare-halfplane", lightcone=True)


def euclid_graph():
    """``((1+|x|^2)/2, (-1+|x|^2)/2, x)``: flat, lies in the light cone."""

    def fn(c):
        x, y = c
        r2 = x * x + y * y
        return [(r2 + 1.0) * 0.5, (r2 - 1.0) * 0.5, x, y]

    return ParametricImmersion(fn, [[-2.0, 2.0], [-2.0, 2.0]], "euclid-graph", lightcone=True)


def torus(R=2.0, rho=0.7):
    """Torus of revolution in the spacelike hyperplane ``x0 = 0`` of L^4."""
    if not R > rho > 0:
        raise ValueError("need R > rho > 0")

    def fn(c):
        u, w = c
        s = jet.cos(w) * rho + R
        return [0.0, s * jet.cos(u), s * jet.sin(u), jet.sin(w) * rho]

    im = ParametricImmersion(fn, [[0.0, 2 * math.pi], [0.0, 2 * math.pi]], f"torus(R={R!r}, rho={rho!r})", compact=True)
    im.R = R
    im.rho = rho
    return im


CATALOG = ("round-graph", "obata-graph", "snvr", "flat-cylinder", "poincare-halfplane", "euclid-graph", "torus")


def catalog(name, **params):
    """Build a catalog immersion by name (see :data:`CATALOG`)."""
    if name == "round-graph":
        return round_graph(params.get("n", 2))
    if name == "obata-graph":
        return obata_graph(params["v"], params.get("k", 1.0))
    if name == "snvr":
        return snvr(params["v"], params.get("r", 1.0))
    if name == "flat-cylinder":
        return flat_cylinder()
    if name == "poincare-halfplane":
        return poincare_halfplane()
    if name == "euclid-graph":
        return euclid_graph()
    if name == "torus":
        return torus(params.get("R", 2.0), params.get("rho", 0.7))
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(CATALOG)}")


def graph_immersion(f, n=None, rotation=None):
    return SphereGraph(f, n=n, rotation=rotation)


# ---------------------------------------------------------------- local data


@dataclass
class Local:
    """Position, coordinate derivatives and metric data at a batch of points."""

    psi: np.ndarray  # (N, D)
    d1: np.ndarray  # (N, n, D)
    d2: np.ndarray  # (N, n, n, D)
    g: np.ndarray  # (N, n, n)
    ginv: np.ndarray

    @property
    def christoffel(self):
        """``Gamma[k, i, j]`` from the tangential part of the second derivatives."""
        low = _mdot(self.d2[:, None, :, :, :], self.d1[:, :, None, None, :])  # (N, l, i, j)
        return np.einsum("nkl,nlij->nkij", self.ginv, low)

    @property
    def sqrt_det(self):
        return np.sqrt(np.linalg.det(self.g))


def local_data(im, P, U=None):
    comps = im.local_jets(P, U)
    psi = np.stack([c.val for c in comps], axis=-1)
    d1 = np.stack([c.grad for c in comps], axis=-1)
    d2 = np.stack([c.hess for c in comps], axis=-1)
    g = _mdot(d1[:, :, None, :], d1[:, None, :, :])
    det = np.linalg.det(g)
    scale = np.einsum("nii->n", g) ** g.shape[1]
    if np.any(~(det > 1e-14 * np.maximum(scale, 1e-300))):
        raise ChartSingularity("induced metric is degenerate or not spacelike at a sample point")
    return Local(psi, d1, d2, g, np.linalg.inv(g))


def _shift(n, i, h):
    def U(P):
        u = np.zeros((np.shape(P)[0], n))
        u[:, i] = h
        return u

    return U


# ---------------------------------------------------------------- frames


class Frame:
    """A null normal frame ``(xi, eta)`` with ``<xi, eta> = 1``."""

    name = "frame"

    def vectors(self, im, P, U=None, loc=None):
        raise NotImplementedError


class LightconeFrame(Frame):
    """``xi = psi`` and ``eta`` built from ``psi_0`` and its induced gradient."""

    name = "lightcone"

    def vectors(self, im, P, U=None, loc=None):
        if not im.lightcone:
            raise NotInLightCone(f"{im.name} does not lie in the light cone")
        loc = local_data(im, P, U) if loc is None else loc
        psi = loc.psi
        p0 = psi[:, 0]
        dp0 = loc.d1[:, :, 0]
        grad = np.einsum("nij,nj->ni", loc.ginv, dp0)
        g2 = np.einsum("ni,ni->n", grad, dp0)
        push = np.einsum("ni,nid->nd", grad, loc.d1)
        e0 = np.zeros_like(psi)
        e0[:, 0] = 1.0
        eta = ((1.0 + g2) / (2.0 * p0 * p0))[:, None] * psi - (e0 + push) / p0[:, None]
        return psi.copy(), eta


class HyperplaneFrame(Frame):
    """``(d0 + nu)/sqrt 2, (-d0 + nu)/sqrt 2`` for a surface in ``x0 = 0`` of L^4.

    ``nu`` is the unit normal inside the hyperplane; the frame has ``alpha = 0``.
    """

    name = "parallel"

    def vectors(self, im, P, U=None, loc=None):
        loc = local_data(im, P, U) if loc is None else loc
        if im.dim != 4 or np.any(np.abs(loc.psi[:, 0]) > 1e-12):
            raise ValueError("hyperplane frame needs a surface in x0 = 0 of L^4")
        nu = np.cross(loc.d1[:, 0, 1:], loc.d1[:, 1, 1:])
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        e0 = np.zeros((nu.shape[0], 4))
        e0[:, 0] = 1.0
        N = np.concatenate([np.zeros((nu.shape[0], 1)), nu], axis=1)
        s = 1.0 / math.sqrt(2.0)
        return s * (e0 + N), s * (N - e0)


def _chart_function(phi):
    """Coerce ``phi`` to a callable on domain points."""
    if isinstance(phi, (int, float)):
        c = float(phi)
        return lambda Q: np.full(Q.shape[0], c)
    if isinstance(phi, str):
        phi = parse_field(phi)
    if isinstance(phi, FieldExpression):
        if phi.is_chart_field:
            return lambda Q: np.broadcast_to(np.asarray(phi({"u": Q[:, 0], "w": Q[:, 1]}), float), Q.shape[:1]).copy()
        phi = as_field(phi, phi.n)
    if isinstance(phi, ScalarField):
        return phi
    return phi


class RescaledFrame(Frame):
    """``(xi / phi, phi eta)`` for a positive function ``phi`` on the domain."""

    def __init__(self, base, phi):
        self.base = base
        self.phi = _chart_function(phi)
        self.name = f"rescaled({base.name})"

    def values(self, im, P, U=None):
        val = np.asarray(self.phi(im.domain_points(P, U)), dtype=float)
        if np.any(val <= 0):
            raise jet.DomainError("rescaling function must be positive")
        return val

    def vectors(self, im, P, U=None, loc=None):
        xi, eta = self.base.vectors(im, P, U, loc)
        phi = self.values(im, P, U)[:, None]
        return xi / phi, eta * phi


def rescaled_frame(frame, phi):
    return RescaledFrame(frame, phi)


def lightcone_frame(im):
    if not im.lightcone:
        raise NotInLightCone(f"{im.name} does not lie in the light cone")
    return LightconeFrame()


def default_frame(im):
    return LightconeFrame() if im.lightcone else HyperplaneFrame()


def parallel_H_frame(im):
    """Frame with constant traces ``(1, u v)`` on a light-cone graph (xi -> -xi/n, eta -> -n eta)."""
    return ScaledFrame(LightconeFrame(), -1.0 / im.n)


class ScaledFrame(Frame):
    """``(c xi, eta / c)`` for a nonzero constant ``c`` (sign allowed)."""

    def __init__(self, base, c):
        self.base = base
        self.c = float(c)
        self.name = f"scaled({base.name}, {self.c!r})"

    def vectors(self, im, P, U=None, loc=None):
        xi, eta = self.base.vectors(im, P, U, loc)
        return self.c * xi, eta / self.c


# ---------------------------------------------------------------- shape data


def frame_derivatives(im, frame, P, h=FD_STEP):
    """Central differences ``d_i xi`` and ``d_i eta`` in chart coordinates, shape (N, n, D)."""
    P = np.atleast_2d(P)
    dxi, deta = [], []
    for i in range(im.n):
        xp, ep = frame.vectors(im, P, _shift(im.n, i, h)(P))
        xm, em = frame.vectors(im, P, _shift(im.n, i, -h)(P))
        dxi.append((xp - xm) / (2 * h))
        deta.append((ep - em) / (2 * h))
    return np.stack(dxi, axis=1), np.stack(deta, axis=1)


def _raise(loc, B):
    """Endomorphism matrix ``A[k, i] = g^{kj} B[i, j]``."""
    return np.einsum("nkj,nij->nki", loc.ginv, B)


def _shape_exact(loc, mu):
    return _raise(loc, _mdot(loc.d2, mu[:, None, None, :]))


def _shape_fd(loc, dmu):
    return _raise(loc, -_mdot(dmu[:, :, None, :], loc.d1[:, None, :, :]))


@dataclass
class ShapeData:
    """Extrinsic data of ``im`` in ``frame`` at a batch of chart points."""

    points: np.ndarray
    loc: Local
    xi: np.ndarray
    eta: np.ndarray
    A_xi: np.ndarray
    A_eta: np.ndarray
    alpha: np.ndarray
    route: str
    n: int = 2
    extra: dict = field(default_factory=dict)

    @property
    def g(self):
        return self.loc.g

    @property
    def trace_xi(self):
        return np.einsum("nii->n", self.A_xi)

    @property
    def trace_eta(self):
        return np.einsum("nii->n", self.A_eta)

    @property
    def H(self):
        return (self.trace_eta[:, None] * self.xi + self.trace_xi[:, None] * self.eta) / self.n

    @property
    def H_sq(self):
        """``<H, H> = (2/n^2) tr(A_xi) tr(A_eta)``."""
        return 2.0 * self.trace_xi * self.trace_eta / self.n**2

    def II(self):
        """``II(d_i, d_j) = <A_eta d_i, d_j> xi + <A_xi d_i, d_j> eta``, shape (N, n, n, D)."""
        low_eta = np.einsum("nkj,nki->nij", self.g, self.A_eta)
        low_xi = np.einsum("nkj,nki->nij", self.g, self.A_xi)
        return low_eta[..., None] * self.xi[:, None, None, :] + low_xi[..., None] * self.eta[:, None, None, :]

    def II_ambient(self):
        """Normal part of ``d_i d_j psi`` computed directly from the immersion."""
        G = self.loc.christoffel
        return self.loc.d2 - np.einsum("nkij,nkd->nijd", G, self.loc.d1)

    def II_sq(self):
        """``<II, II> = g^{ik} g^{jl} <II_ij, II_kl>`` from the ambient normal part."""
        II = self.II_ambient()
        gi = self.loc.ginv
        return np.einsum("nik,njl,nijkl->n", gi, gi, _mdot(II[:, :, :, None, None, :], II[:, None, None, :, :, :]))

    @property
    def umbilicity_defect(self):
        """``tr(A_eta^2) - (1/n) tr(A_eta)^2``."""
        tr2 = np.einsum("nij,nji->n", self.A_eta, self.A_eta)
        return tr2 - self.trace_eta**2 / self.n

    def self_adjoint_defect(self):
        out = 0.0
        for A in (self.A_xi, self.A_eta):
            low = np.einsum("nkj,nki->nij", self.g, A)
            out = max(out, float(np.max(np.abs(low - low.transpose(0, 2, 1)))))
        return out

    def alpha_sharp(self):
        return np.einsum("nij,nj->ni", self.loc.ginv, self.alpha)


def shape_operators(im, frame, P, route="fd", h=FD_STEP):
    """Shape operators, one form and metric at chart points ``P``.

    ``route="fd"`` differentiates the normal fields by central differences
    (Weingarten identity); ``route="exact"`` pairs the normals with the exact
    second derivatives of the immersion. The one form always uses differences.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    loc = local_data(im, P)
    xi, eta = frame.vectors(im, P, None, loc)
    dxi, deta = frame_derivatives(im, frame, P, h)
    if route == "fd":
        A_xi, A_eta = _shape_fd(loc, dxi), _shape_fd(loc, deta)
    elif route == "exact":
        A_xi, A_eta = _shape_exact(loc, xi), _shape_exact(loc, eta)
    else:
        raise ValueError(f"unknown route {route!r}")
    alpha = _mdot(dxi, eta[:, None, :])
    return ShapeData(P, loc, xi, eta, A_xi, A_eta, alpha, route, im.n)


def weingarten_hessian(im, P):
    """``A_eta = -((1+|grad psi0|^2)/(2 psi0^2)) Id + (1/psi0) Hess psi0`` for light-cone immersions."""
    loc = local_data(im, np.atleast_2d(P))
    p0 = loc.psi[:, 0]
    dp0 = loc.d1[:, :, 0]
    hess = loc.d2[:, :, :, 0] - np.einsum("nkij,nk->nij", loc.christoffel, dp0)
    g2 = np.einsum("ni,nij,nj->n", dp0, loc.ginv, dp0)
    n = im.n
    eye = np.broadcast_to(np.eye(n), (p0.size, n, n))
    return -((1.0 + g2) / (2 * p0 * p0))[:, None, None] * eye + _raise(loc, hess) / p0[:, None, None]


def psi0_formula_Hsq(im, P):
    """``(1 + |grad psi0|^2)/psi0^2 - (2/(n psi0)) lap psi0``."""
    loc = local_data(im, np.atleast_2d(P))
    p0 = loc.psi[:, 0]
    dp0 = loc.d1[:, :, 0]
    hess = loc.d2[:, :, :, 0] - np.einsum("nkij,nk->nij", loc.christoffel, dp0)
    lap = np.einsum("nij,nij->n", loc.ginv, hess)
    g2 = np.einsum("ni,nij,nj->n", dp0, loc.ginv, dp0)
    return (1.0 + g2) / (p0 * p0) - 2.0 * lap / (im.n * p0)


def mean_curvature(im, frame, P, route="fd"):
    return shape_operators(im, frame, P, route).H


def decompose(shape, a):
    """Split ``a`` into tangent coordinates ``a_top`` (N, n) and normal part (N, D)."""
    a = np.asarray(a, dtype=float)
    loc = shape.loc
    low = _mdot(loc.d1, a)  # (N, n)
    top = np.einsum("nij,nj->ni", loc.ginv, low)
    normal = _mdot(a, shape.xi)[:, None] * shape.eta + _mdot(a, shape.eta)[:, None] * shape.xi
    return top, normal


def gauss_sectional(shape, X=None, Y=None):
    """Sectional curvature of the plane spanned by coordinate vectors ``X``, ``Y``.

    Uses ``R(X,Y)Z = A_{II(Y,Z)} X - A_{II(X,Z)} Y``. Defaults to the plane
    of the first two coordinate directions.
    """
    N, n = shape.points.shape[0], shape.n
    e = np.eye(n)
    X = np.broadcast_to(e[0] if X is None else np.asarray(X, float), (N, n))
    Y = np.broadcast_to(e[1] if Y is None else np.asarray(Y, float), (N, n))
    g = shape.g
    gXX = np.einsum("ni,nij,nj->n", X, g, X)
    gYY = np.einsum("ni,nij,nj->n", Y, g, Y)
    gXY = np.einsum("ni,nij,nj->n", X, g, Y)
    area = gXX * gYY - gXY**2
    if np.any(area <= 1e-14 * gXX * gYY):
        raise ValueError("degenerate plane")
    II = shape.II()
    IIXX = np.einsum("ni,nj,nijd->nd", X, X, II)
    IIYY = np.einsum("ni,nj,nijd->nd", Y, Y, II)
    IIXY = np.einsum("ni,nj,nijd->nd", X, Y, II)
    return (_mdot(IIXX, IIYY) - _mdot(IIXY, IIXY)) / area


def covariant_shape_derivative(im, frame, P, h=FD_STEP, which="eta"):
    """``(nabla_i A)[k, j]``, shape (N, n, n, n), by differences of exact-route ``A``.

    Returns the array ``D`` with ``(nabla_{d_i} A)(d_j) = D[:, i, k, j] d_k``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    loc = local_data(im, P)
    sel = 1 if which == "eta" else 0

    def A_at(U):
        lo = local_data(im, P, U)
        return _shape_exact(lo, frame.vectors(im, P, U, lo)[sel])

    A0 = A_at(None)
    dA = np.stack(
        [(A_at(_shift(im.n, i, h)(P)) - A_at(_shift(im.n, i, -h)(P))) / (2 * h) for i in range(im.n)], axis=1
    )
    G = loc.christoffel  # (N, k, i, j)
    return dA + np.einsum("nkil,nlj->nikj", G, A0) - np.einsum("nkl,nlij->nikj", A0, G)


def codazzi_defect(im, frame, P, h=FD_STEP):
    """Max over coordinate pairs of the g-norm of the Codazzi combination for ``A_eta``."""
    shape = shape_operators(im, frame, P, route="exact", h=h)
    D = covariant_shape_derivative(im, frame, P, h)
    A, alpha, g = shape.A_eta, shape.alpha, shape.g
    worst = np.zeros(shape.points.shape[0])
    for i in range(im.n):
        for j in range(i + 1, im.n):
            v = D[:, i, :, j] - D[:, j, :, i] + alpha[:, i, None] * A[:, :, j] - alpha[:, j, None] * A[:, :, i]
            worst = np.maximum(worst, np.sqrt(np.einsum("ni,nij,nj->n", v, g, v)))
    return worst


def g_norm(shape, v):
    return np.sqrt(np.einsum("ni,nij,nj->n", v, shape.g, v))


# ---------------------------------------------------------------- reports


def invariants_report(im, P, frame=None, route="fd"):
    """Cross-checks of the extrinsic and intrinsic curvature identities."""
    frame = default_frame(im) if frame is None else frame
    shape = shape_operators(im, frame, P, route)
    n = im.n
    out = {
        "trace_A_xi": shape.trace_xi,
        "trace_A_eta": shape.trace_eta,
        "H_sq_traces": shape.H_sq,
        "II_sq_ambient": shape.II_sq(),
        "II_sq_traces": 2.0 * np.einsum("nij,nji->n", shape.A_xi, shape.A_eta),
        "umbilicity_defect": shape.umbilicity_defect,
        "self_adjoint_defect": shape.self_adjoint_defect(),
        # Gauss equation: S = n^2 <H,H> - <II,II>
        "S_gauss": n * n * shape.H_sq - shape.II_sq(),
    }
    if im.lightcone:
        out["H_sq_psi0"] = psi0_formula_Hsq(im, P)
        eye = np.eye(n)
        out["A_xi_plus_id"] = np.max(np.abs(shape.A_xi + eye), axis=(1, 2))
    if isinstance(im, SphereGraph):
        f = im.graph_field
        X = im.domain_points(P)
        out["H_sq_intrinsic"] = mean_curvature_sq(f, X, n)
        out["S_intrinsic"] = scalar_curvature(f, X, n)
    return shape, out


@dataclass
class Factorization:
    f: np.ndarray
    phi: np.ndarray
    sphere_defect: float
    metric_defect: float


def graph_factorization(im, P):
    """Write a light-cone immersion as ``i_f`` after a sphere map ``Phi``.

    Returns ``f = log psi0`` and ``Phi = spatial(psi)/psi0`` at ``P`` plus the
    two consistency checks (``|Phi| = 1`` and ``g = psi0^2 Phi^* g0``).
    """
    loc = local_data(im, np.atleast_2d(P))
    p0 = loc.psi[:, 0]
    if np.any(p0 <= 0) or np.max(np.abs(_mdot(loc.psi, loc.psi)) / p0**2) > LIGHTCONE_TOL:
        raise NotInLightCone(f"{im.name} does not lie in the light cone")
    phi = loc.psi[:, 1:] / p0[:, None]
    dphi = (loc.d1[:, :, 1:] - loc.d1[:, :, :1] * phi[:, None, :]) / p0[:, None, None]
    pull = np.einsum("nia,nja->nij", dphi, dphi)
    return Factorization(
        f=np.log(p0),
        phi=phi,
        sphere_defect=float(np.max(np.abs(np.linalg.norm(phi, axis=1) - 1.0))),
        metric_defect=float(np.max(np.abs(loc.g - (p0 * p0)[:, None, None] * pull))),
    )


def lightcone_defect(im, P):
    psi = im(P)
    return float(np.max(np.abs(minkowski_dot(psi, psi)))), float(np.min(psi[:, 0]))


def volume_elements(im, N):
    """Quadrature nodes and Riemannian weights ``w sqrt(det g)`` for a compact immersion."""
    if not im.compact:
        raise ValueError(f"{im.name} is not compact")
    P, w, rule = im.quadrature(N)
    return P, w * local_data(im, P).sqrt_det, rule

