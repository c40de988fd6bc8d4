"""Lorentz-Minkowski space L^{n+2}: product, causal type, Obata parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CAUSAL_TOL = 1e-12


def metric(dim):
    """Diagonal of the signature (-, +, ..., +)."""
    sig = np.ones(dim)
    sig[0] = -1.0
    return sig


def minkowski_dot(a, b):
    """Lorentzian product of (batches of) vectors, index 0 timelike.

    Both arguments are broadcast over leading axes; the last axis holds the
    ``n + 2`` components.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} != {b.shape[-1]}")
    if a.shape[-1] < 4:
        raise ValueError("Lorentz vectors need at least 4 components (n >= 2)")
    return np.sum(a * b, axis=-1) - 2.0 * a[..., 0] * b[..., 0]


def minkowski_norm_sq(a):
    return minkowski_dot(a, a)


def causal_type(a, tol=CAUSAL_TOL):
    """'zero', 'timelike', 'lightlike' or 'spacelike'.

    The lightlike test is relative to the Euclidean size of ``a`` so the
    answer does not change when ``a`` is scaled by a positive number.
    """
    a = np.asarray(a, dtype=float)
    big = float(np.max(np.abs(a)))
    if big == 0.0:
        return "zero"
    a = a / big  # avoids underflow of tiny vectors
    scale = float(np.dot(a, a))
    q = float(minkowski_dot(a, a))
    if abs(q) <= tol * scale:
        return "lightlike"
    return "timelike" if q < 0 else "spacelike"


def basis(dim, i):
    e = np.zeros(dim)
    e[i] = 1.0
    return e


@dataclass(frozen=True)
class ObataParameters:
    """A unit timelike past-pointing ``v`` and a curvature ``k > 0``.

    They label the solution ``f(x) = log((1/sqrt(k)) / (-v0 + <vbar, x>))``
    of the constant-curvature equation on the sphere of dimension
    ``len(v) - 2``.
    """

    v: np.ndarray
    k: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).copy()
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        if v.ndim != 1 or v.size < 4:
            raise ValueError("v must be a vector with n + 2 >= 4 components")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if abs(minkowski_dot(v, v) + 1.0) > 1e-10:
            raise ValueError(f"<v,v> = {minkowski_dot(v, v)!r}, expected -1")
        if not v[0] < 0:
            raise ValueError("v0 must be negative")

    @property
    def n(self):
        return self.v.size - 2

    @property
    def denominator_bound(self):
        """Lower bound of ``-v0 + <vbar, x>`` over the unit sphere."""
        v0 = self.v[0]
        return abs(v0) - np.sqrt(v0 * v0 - 1.0)

    @classmethod
    def from_spatial(cls, vbar, k=1.0):
        """Complete ``vbar`` to a unit past-pointing timelike vector."""
        vbar = np.asarray(vbar, dtype=float)
        v0 = -np.sqrt(1.0 + vbar @ vbar)
        return cls(np.concatenate([[v0], vbar]), k)

    @classmethod
    def random(cls, n, rng, max_boost=1.0, k_range=(0.25, 4.0)):
        """Random parameters with ``|vbar|`` up to ``max_boost``."""
        direction = rng.normal(size=n + 1)
        direction /= np.linalg.norm(direction)
        vbar = direction * rng.uniform(0.0, max_boost)
        k = float(np.exp(rng.uniform(np.log(k_range[0]), np.log(k_range[1]))))
        return cls.from_spatial(vbar, k)
