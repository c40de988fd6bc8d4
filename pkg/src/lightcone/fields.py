"""Scalar fields on S^n and their tangential derivatives.

Every field is defined through a function of the ambient coordinates
``x1..x{n+1}`` (:meth:`ScalarField.ambient`). Two derivative paths exist:

* ``"analytic"``: exact ambient gradient and Hessian (jets, or the harmonic
  kernel for spectral fields), then
  ``grad_S f = grad F - (x . grad F) x`` and
  ``lap_S f = tr H - x^T H x - n (x . grad F)``;
* ``"fd"``: central differences of the degree-0 extension ``F(y) = f(y/|y|)``,
  whose ambient Laplacian on the sphere equals the Laplace-Beltrami value.
"""

from __future__ import annotations

import numpy as np

from . import jet
from .expr import FieldExpression, parse_field
from .jet import Jet
from .kernels import sh_point_derivs
from .minkowski import ObataParameters
from .sht import SHGrid, degrees, read_coeffs, sh_laplacian, write_coeffs
from .sphere import to_sphere

FD_STEP = 1e-5


def _points(X, n):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != n + 1:
        raise ValueError(f"expected points with {n + 1} coordinates, got {X.shape[1]}")
    return X


class ScalarField:
    """Base class; subclasses implement :meth:`ambient`."""

    n: int = 2
    name: str = "field"

    def ambient(self, xs):
        """Evaluate on a list of ``n + 1`` coordinate arrays or jets."""
        raise NotImplementedError

    def __call__(self, X):
        X = _points(X, self.n)
        out = self.ambient([X[:, a] for a in range(self.n + 1)])
        return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()

    def ambient_derivs(self, X):
        """Value, ambient gradient (N, n+1) and ambient Hessian (N, n+1, n+1)."""
        X = _points(X, self.n)
        out = self.ambient(Jet.variables(X))
        if not isinstance(out, Jet):
            N, d = X.shape
            out = Jet.constant(out, N, d)
        return out.val, out.grad, out.hess

    def jet_on(self, ys):
        """Jet of ``f(y(u))`` given jets ``ys`` of the sphere coordinates."""
        out = self.ambient(ys)
        if not isinstance(out, Jet):
            out = Jet.constant(out, ys[0].val.shape[0], ys[0].nvars)
        return out

    # -- derivatives --------------------------------------------------------

    def _extension(self, Y):
        return self(Y / np.linalg.norm(Y, axis=1, keepdims=True))

    def gradient(self, X, method="analytic", h=FD_STEP):
        """Tangential gradient ``grad^0 f`` as ambient vectors orthogonal to ``x``."""
        X = to_sphere(_points(X, self.n))
        if method == "analytic":
            _, g, _ = self.ambient_derivs(X)
            return g - np.sum(g * X, axis=1, keepdims=True) * X
        if method == "fd":
            out = np.empty_like(X)
            for a in range(self.n + 1):
                e = np.zeros(self.n + 1)
                e[a] = h
                out[:, a] = (self._extension(X + e) - self._extension(X - e)) / (2 * h)
            return out
        raise ValueError(f"unknown derivative method {method!r}")

    def laplacian(self, X, method="analytic", h=FD_STEP):
        """Laplace-Beltrami value ``lap^0 f`` for the round metric."""
        X = to_sphere(_points(X, self.n))
        if method == "analytic":
            _, g, H = self.ambient_derivs(X)
            radial = np.sum(g * X, axis=1)
            return np.trace(H, axis1=1, axis2=2) - np.einsum("na,nab,nb->n", X, H, X) - self.n * radial
        if method == "fd":
            f0 = self._extension(X)
            out = np.zeros(X.shape[0])
            for a in range(self.n + 1):
                e = np.zeros(self.n + 1)
                e[a] = h
                out += self._extension(X + e) - 2.0 * f0 + self._extension(X - e)
            return out / (h * h)
        raise ValueError(f"unknown derivative method {method!r}")

    def grad_norm_sq(self, X, method="analytic", h=FD_STEP):
        g = self.gradient(X, method=method, h=h)
        return np.sum(g * g, axis=1)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} on S^{self.n}>"


class ExpressionField(ScalarField):
    """Closed-form field: a parsed expression or a callable on coordinates."""

    def __init__(self, expr, n=2, name=None):
        if isinstance(expr, str):
            expr = parse_field(expr, n)
        if isinstance(expr, FieldExpression):
            if expr.is_chart_field:
                raise ValueError("sphere fields may only use x1..x{n+1}")
            self._fn = lambda xs: expr({f"x{i + 1}": x for i, x in enumerate(xs)})
            name = name or expr.source
        else:
            self._fn = expr
        self.expression = expr
        self.n = n
        self.name = name or getattr(expr, "__name__", "expression")

    def ambient(self, xs):
        return self._fn(xs)


class ConstantField(ScalarField):
    def __init__(self, value, n=2):
        self.value = float(value)
        self.n = n
        self.name = repr(self.value)

    def ambient(self, xs):
        if isinstance(xs[0], Jet):
            return Jet.constant(self.value, xs[0].val.shape[0], xs[0].nvars)
        return np.full(np.shape(xs[0]), self.value)


class ObataField(ScalarField):
    """``f(x) = log((1/sqrt(k)) / (-v0 + <vbar, x>))``."""

    def __init__(self, params: ObataParameters):
        self.params = params
        self.n = params.n
        self.name = f"obata(v={params.v.tolist()}, k={params.k!r})"

    def denominator(self, xs):
        v = self.params.v
        d = -v[0]
        for i, x in enumerate(xs):
            d = d + v[i + 1] * x
        return d

    def ambient(self, xs):
        return -0.5 * np.log(self.params.k) - jet.log(self.denominator(xs))


class RotatedField(ScalarField):
    """``x -> base(R x)``."""

    def __init__(self, base, R):
        self.base = base
        self.R = np.asarray(R, dtype=float)
        self.n = base.n
        self.name = f"rotated({base.name})"

    def ambient(self, xs):
        ys = []
        for a in range(self.n + 1):
            y = 0.0
            for b in range(self.n + 1):
                if self.R[a, b] != 0.0:
                    y = xs[b] * self.R[a, b] + y
            ys.append(y)
        return self.base.ambient(ys)


class SpectralField(ScalarField):
    """Band-limited field on S^2 from real harmonic coefficients.

    Pointwise values and exact derivatives come from the Cartesian
    polynomial form of the harmonics, so they are valid at the poles too.
    """

    def __init__(self, coeffs, lmax=None, name="spectral"):
        coeffs = np.asarray(coeffs, dtype=float).copy()
        if lmax is None:
            lmax = int(round(np.sqrt(coeffs.size))) - 1
        if coeffs.size != (lmax + 1) ** 2:
            raise ValueError("coefficient vector does not match lmax")
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.lmax = lmax
        self.n = 2
        self.name = name

    def ambient_derivs(self, X):
        X = _points(X, 2)
        return sh_point_derivs(self.coeffs, self.lmax, X)

    def ambient(self, xs):
        if isinstance(xs[0], Jet):
            X = np.stack([x.val for x in xs], axis=1)
            val, grad, hess = sh_point_derivs(self.coeffs, self.lmax, X)
            return jet.compose(val, grad, hess, xs)
        X = np.stack(np.broadcast_arrays(*xs), axis=1).reshape(-1, 3)
        return sh_point_derivs(self.coeffs, self.lmax, X)[0]

    def laplacian(self, X, method="analytic", h=FD_STEP):
        if method == "spectral":
            return SpectralField(sh_laplacian(self.coeffs, self.lmax), self.lmax)(X)
        return super().laplacian(X, method=method, h=h)

    def to_file(self, path):
        return write_coeffs(path, self.coeffs, self.lmax)

    @classmethod
    def from_file(cls, path):
        coeffs, lmax = read_coeffs(path)
        return cls(coeffs, lmax, name=str(path))


def random_spectral_field(rng, lmax=32, content=4, amplitude=0.5, include_mean=False):
    """Random band-limited field with harmonics up to degree ``content``.

    Coefficients decay like ``1/(1+l)`` and the field is scaled so that its
    maximum modulus on a fine grid equals ``amplitude``.
    """
    deg = degrees(lmax)
    c = rng.normal(size=deg.size) / (1.0 + deg)
    c[deg > content] = 0.0
    if not include_mean:
        c[0] = 0.0
    grid = SHGrid(lmax, max(2 * lmax, 24))
    vals = grid.synthesize(c)
    c *= amplitude / np.max(np.abs(vals))
    return SpectralField(c, lmax, name="random")


def as_field(spec, n=2):
    """Coerce a number, expression string, callable or field to a ScalarField."""
    if isinstance(spec, ScalarField):
        return spec
    if isinstance(spec, (int, float)):
        return ConstantField(spec, n)
    if isinstance(spec, ObataParameters):
        return ObataField(spec)
    return ExpressionField(spec, n)
