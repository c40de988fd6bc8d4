"""Pointwise conformal geometry of ``g_f = e^{2f} g0`` on S^n.

All functions are vectorized over points ``X`` of shape (N, n+1) and take a
``method`` argument selecting the derivative path of the field
(``"analytic"`` or ``"fd"``; spectral fields also accept ``"spectral"`` for
the Laplacian).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jet
from .fields import ObataField, ScalarField, as_field
from .jet import DomainError
from .minkowski import ObataParameters
from .sphere import integrate, to_sphere

ANALYTIC_TOL = 1e-9
FD_TOL = 1e-5


def tolerance_for(method):
    return FD_TOL if method == "fd" else ANALYTIC_TOL


def _setup(f, X, n):
    f = as_field(f, n or 2)
    if n is not None and f.n != n:
        raise ValueError(f"field lives on S^{f.n}, not S^{n}")
    return f, to_sphere(np.atleast_2d(X)), f.n


def _parts(f, X, method):
    """Value, Laplacian and squared gradient norm of ``f`` at ``X``."""
    val = f(X)
    lap = f.laplacian(X, method=method)
    gmethod = "analytic" if method == "spectral" else method
    return val, lap, f.grad_norm_sq(X, method=gmethod)


def scalar_curvature(f, X, n=None, method="analytic"):
    """Scalar curvature of ``e^{2f} g0``."""
    f, X, n = _setup(f, X, n)
    val, lap, g2 = _parts(f, X, method)
    return np.exp(-2.0 * val) * (n * (n - 1) - 2 * (n - 1) * lap - (n - 1) * (n - 2) * g2)


def mean_curvature_sq(f, X, n=None, method="analytic"):
    """``<H_f, H_f>`` of the light-cone graph ``x -> e^f (1, x)``."""
    f, X, n = _setup(f, X, n)
    val, lap, g2 = _parts(f, X, method)
    return (n - 2.0 * lap - (n - 2) * g2) / (n * np.exp(2.0 * val))


def equation_E_residual(f, k, X, n=None, method="analytic"):
    """``2 lap f + (n-2)|grad f|^2 - n (1 - k e^{2f})``; zero on constant-curvature solutions."""
    if not k > 0:
        raise ValueError("k must be positive")
    f, X, n = _setup(f, X, n)
    if n == 2:
        return equation_E_residual_s2(f, k, X, method=method)
    val, lap, g2 = _parts(f, X, method)
    return 2.0 * lap + (n - 2) * g2 - n * (1.0 - k * np.exp(2.0 * val))


def equation_E_residual_s2(f, k, X, method="analytic"):
    """Two-sphere form ``2 lap f - 2 (1 - k e^{2f})`` (no gradient term)."""
    f = as_field(f, 2)
    if f.n != 2:
        raise ValueError("the S^2 residual needs a field on S^2")
    X = to_sphere(np.atleast_2d(X))
    return 2.0 * f.laplacian(X, method=method) - 2.0 * (1.0 - k * np.exp(2.0 * f(X)))


def equation_E_residual_via_H(f, k, X, n=None, method="analytic"):
    """Same residual written as ``n (k - <H,H>) e^{2f}``."""
    f, X, n = _setup(f, X, n)
    return n * (k - mean_curvature_sq(f, X, n, method)) * np.exp(2.0 * f(X))


def h_equation_residual(h, X, n=None, method="analytic"):
    """``lap h - (n / (2h)) (1 - h^2 + |grad h|^2)`` for positive ``h``."""
    h, X, n = _setup(h, X, n)
    val = h(X)
    if np.any(val <= 0):
        raise DomainError("h must be positive")
    lap = h.laplacian(X, method=method)
    g2 = h.grad_norm_sq(X, method="analytic" if method == "spectral" else method)
    return lap - n / (2.0 * val) * (1.0 - val * val + g2)


def h_substitution_factor(f, X):
    """Factor ``c(x)`` with ``res_h(e^{-f}) = c * res_E(f, k=1)``, namely ``-e^{-f}/2``."""
    return -0.5 * np.exp(-as_field(f)(X))


def obata_field(v, k=1.0):
    """Member of the explicit solution family; accepts parameters or ``(v, k)``."""
    if isinstance(v, ObataParameters):
        return ObataField(v)
    return ObataField(ObataParameters(np.asarray(v, dtype=float), k))


def _check_yamabe(n):
    if n is None or n < 3:
        raise ValueError("the Yamabe form needs n >= 3 (p = 2n/(n-2))")


def yamabe_residual(phi, k, X, n=None, method="analytic"):
    """Residual of ``lap phi - c phi + c k phi^{(n+2)/(n-2)}`` with ``c = n(n-2)/4``."""
    phi, X, n = _setup(phi, X, n)
    _check_yamabe(n)
    val = phi(X)
    if np.any(val <= 0):
        raise DomainError("phi must be positive")
    c = n * (n - 2) / 4.0
    return phi.laplacian(X, method=method) - c * val + c * k * val ** ((n + 2.0) / (n - 2.0))


def yamabe_energy(phi, k, rule, n=None, method="analytic"):
    """``(E(phi), ||phi||_p)`` by quadrature on ``rule``."""
    phi, _, n = _setup(phi, rule.nodes[:1], n)
    _check_yamabe(n)
    X = rule.nodes
    val = phi(X)
    if np.any(val <= 0):
        raise DomainError("phi must be positive at the quadrature nodes")
    g2 = phi.grad_norm_sq(X, method=method)
    energy = integrate(g2 + n * (n - 2) * k / 4.0 * val * val, rule)
    p = 2.0 * n / (n - 2.0)
    return energy, integrate(val**p, rule) ** (1.0 / p)


class YamabeSubstitute(ScalarField):
    """``phi = e^{(n-2) f / 2}``, the Yamabe unknown attached to ``f``."""

    def __init__(self, f):
        self.base = f
        self.n = f.n
        self.name = f"yamabe({f.name})"

    def ambient(self, xs):
        return jet.exp(self.base.ambient(xs) * ((self.n - 2) / 2.0))


def conformal_volume(f, rule, n=None):
    """``int e^{n f} dV0``, the volume of ``g_f``."""
    f = as_field(f, n or 2)
    n = f.n if n is None else n
    return integrate(np.exp(n * f(rule.nodes)), rule)


def total_mean_curvature(f, rule, n=None, method="analytic"):
    """``int <H_f, H_f> dV_{g_f}``."""
    f = as_field(f, n or 2)
    n = f.n
    X = rule.nodes
    return integrate(mean_curvature_sq(f, X, n, method) * np.exp(n * f(X)), rule)


@dataclass
class ConformalReport:
    field: str
    n: int
    k: float
    method: str
    points: np.ndarray
    scalar_curvature: np.ndarray
    mean_curvature_sq: np.ndarray
    residual: np.ndarray
    volume: float | None = None
    tolerance: float = ANALYTIC_TOL
    extra: dict = field(default_factory=dict)

    @property
    def identity_defect(self):
        """max |S - n(n-1)<H,H>| over the points."""
        return float(np.max(np.abs(self.scalar_curvature - self.n * (self.n - 1) * self.mean_curvature_sq)))

    def to_dict(self):
        return {
            "field": self.field,
            "n": self.n,
            "k": self.k,
            "method": self.method,
            "points": self.points.tolist(),
            "scalar_curvature": self.scalar_curvature.tolist(),
            "mean_curvature_sq": self.mean_curvature_sq.tolist(),
            "residual_E": self.residual.tolist(),
            "identity_defect": self.identity_defect,
            "volume": self.volume,
            **self.extra,
        }


def conformal_report(f, X, k=1.0, n=None, method="analytic", rule=None):
    f, X, n = _setup(f, X, n)
    return ConformalReport(
        field=f.name,
        n=n,
        k=float(k),
        method=method,
        points=X,
        scalar_curvature=scalar_curvature(f, X, n, method),
        mean_curvature_sq=mean_curvature_sq(f, X, n, method),
        residual=equation_E_residual(f, k, X, n, method),
        volume=None if rule is None else conformal_volume(f, rule, n),
        tolerance=tolerance_for(method),
    )
