"""Points on S^n, local charts, and tensor-product quadrature rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jet import Jet, sqrt as jsqrt

SPHERE_TOL = 1e-12


def sphere_volume(n):
    """Volume of the unit sphere S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def to_sphere(x, strict=False):
    """Return ``x`` (shape (..., n+1)) as unit vectors.

    Off-sphere input is renormalized unless ``strict``, in which case a
    deviation above 1e-12 is rejected.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 3:
        raise ValueError("sphere points need n + 1 >= 3 coordinates")
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r == 0):
        raise ValueError("the zero vector is not a sphere point")
    if strict and np.any(np.abs(r - 1.0) > SPHERE_TOL):
        raise ValueError("point is not on the unit sphere")
    return x / r


def pole(n, south=False):
    p = np.zeros(n + 1)
    p[-1] = -1.0 if south else 1.0
    return p


def random_points(n, size, rng):
    x = rng.normal(size=(size, n + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def tangent_basis(X):
    """Orthonormal tangent frames at sphere points ``X`` (N, n+1) -> (N, n, n+1).

    Built from a Householder reflection taking ``x`` to a coordinate axis, so
    it is smooth away from one antipodal branch switch and never degenerate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, d = X.shape
    e = np.zeros(d)
    e[-1] = 1.0
    sign = np.where(X[:, -1] >= 0, 1.0, -1.0)
    u = X + sign[:, None] * e
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    H = np.eye(d)[None] - 2.0 * u[:, :, None] * u[:, None, :]
    return H[:, :, : d - 1].transpose(0, 2, 1).copy()


def gnomonic_jets(X, E, U):
    """Jets of ``y(u) = (x + E u) / sqrt(1 + |u|^2)`` seeded on ``u``.

    ``X`` (N, n+1) are chart centres, ``E`` (N, n, n+1) orthonormal tangent
    frames, ``U`` (N, n) the local coordinates where the jets are taken. At
    ``u = 0`` the coordinate vectors are the columns of ``E`` and the round
    metric is the identity.
    """
    us = Jet.variables(U)
    N, n = U.shape
    denom = 1.0 + sum(ui * ui for ui in us)
    inv = 1.0 / jsqrt(denom)
    out = []
    for a in range(X.shape[1]):
        num = Jet.constant(X[:, a], N, n)
        for i in range(n):
            num = num + us[i] * E[:, i, a]
        out.append(num * inv)
    return out


# ------------------------------------------------------------------ quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights; ``weights.sum()`` is the domain measure."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    resolution: int
    shape: tuple = field(default=())

    @property
    def descriptor(self):
        return {"kind": self.kind, "resolution": self.resolution, "nodes": int(self.weights.size)}

    def __len__(self):
        return int(self.weights.size)


def _gauss_legendre(n, a, b):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def sphere_rule(n, N=32):
    """Tensor rule on S^n for n = 2, 3, 4.

    Gauss-Legendre in each polar angle (in ``cos t`` for S^2, which makes the
    rule the standard latitude grid of the harmonic transform) and the
    trapezoid rule with ``2N`` points in the periodic angle.
    """
    if n not in (2, 3, 4):
        raise ValueError("sphere rules are provided for n = 2, 3, 4")
    nlon = 2 * N
    phi = 2.0 * np.pi * np.arange(nlon) / nlon
    wphi = np.full(nlon, 2.0 * np.pi / nlon)
    if n == 2:
        z, wz = np.polynomial.legendre.leggauss(N)
        z = z[::-1].copy()
        wz = wz[::-1].copy()
        s = np.sqrt(1.0 - z * z)
        nodes = np.stack(
            [
                (s[:, None] * np.cos(phi)[None, :]).ravel(),
                (s[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(z, nlon),
            ],
            axis=1,
        )
        weights = (wz[:, None] * wphi[None, :]).ravel()
        return QuadratureRule(nodes, weights, "gauss-legendre x trapezoid", N, (N, nlon))
    # hyperspherical angles t_1..t_{n-1} in [0, pi], phi periodic
    grids = []
    wgrids = []
    for j in range(n - 1):
        t, w = _gauss_legendre(N, 0.0, np.pi)
        grids.append(t)
        wgrids.append(w * np.sin(t) ** (n - 1 - j))
    mesh = np.meshgrid(*grids, phi, indexing="ij")
    wmesh = np.meshgrid(*wgrids, wphi, indexing="ij")
    angles = [m.ravel() for m in mesh]
    weights = np.prod([w.ravel() for w in wmesh], axis=0)
    coords = []
    prefix = np.ones_like(angles[0])
    # x_{n+1} = cos t1, x_n = sin t1 cos t2, ..., x_2 = prod sin * sin phi, x_1 = prod sin * cos phi
    for t in angles[:-1]:
        coords.append(prefix * np.cos(t))
        prefix = prefix * np.sin(t)
    coords.append(prefix * np.sin(angles[-1]))
    coords.append(prefix * np.cos(angles[-1]))
    nodes = np.stack(coords[::-1], axis=1)
    shape = tuple([N] * (n - 1) + [nlon])
    return QuadratureRule(nodes, weights, "gauss-legendre^%d x trapezoid" % (n - 1), N, shape)


def periodic_chart_rule(N, periods=(2.0 * np.pi, 2.0 * np.pi)):
    """Trapezoid rule with N points per periodic chart direction (parameter measure)."""
    axes = [p * np.arange(N) / N for p in periods]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    w = np.prod(periods) / N ** len(periods)
    return QuadratureRule(nodes, np.full(nodes.shape[0], w), "trapezoid^%d" % len(periods), N, (N,) * len(periods))


def integrate(values, rule):
    """``sum_i w_i f(x_i)`` for sampled values or a callable on the nodes.

    Uses numpy's pairwise summation, which is deterministic for a fixed
    node order.
    """
    if callable(values):
        values = values(rule.nodes)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != rule.weights.shape[0]:
        raise ValueError(f"{values.shape[0]} samples for a rule with {rule.weights.shape[0]} nodes")
    return float(np.sum(rule.weights * values))
