"""Second-order forward-mode differentiation over batches of points.

A :class:`Jet` carries a value together with its gradient and Hessian with
respect to ``d`` seed variables, for ``N`` points at once::

    val  : (N,)
    grad : (N, d)
    hess : (N, d, d)

The elementary functions below accept plain arrays or jets, so a single
expression evaluator serves both plain evaluation and exact derivatives.
"""

from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """A function was evaluated outside its real domain."""


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100
    __array_ufunc__ = None

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, values):
        """Seed jets for the columns of ``values`` (shape ``(N, d)``)."""
        values = np.asarray(values, dtype=float)
        n, d = values.shape
        eye = np.broadcast_to(np.eye(d), (n, d, d))
        zero = np.zeros((n, d, d))
        return [cls(values[:, i].copy(), eye[:, i, :].copy(), zero.copy()) for i in range(d)]

    @classmethod
    def constant(cls, value, n, d):
        val = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
        return cls(val, np.zeros((n, d)), np.zeros((n, d, d)))

    @property
    def nvars(self):
        return self.grad.shape[-1]

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        other = np.asarray(other, dtype=float)
        n, d = self.grad.shape
        return Jet(np.broadcast_to(other, (n,)).astype(float), np.zeros((n, d)), np.zeros((n, d, d)))

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val + other, self.grad, self.hess)
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val - other, self.grad, self.hess)
        return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.val * other, self.grad * other[..., None], self.hess * other[..., None, None])
        a, b = self, other
        outer = a.grad[:, :, None] * b.grad[:, None, :]
        return Jet(
            a.val * b.val,
            a.grad * b.val[:, None] + b.grad * a.val[:, None],
            a.hess * b.val[:, None, None] + b.hess * a.val[:, None, None] + outer + outer.transpose(0, 2, 1),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise DomainError("division by zero")
            return self * (1.0 / other)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == int(p) and p >= 0:
            k = int(p)
            if k == 0:
                return self._lift(1.0)
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        v = self.val
        if np.any(v <= 0):
            raise DomainError("non-integer power of a nonpositive value")
        return _chain(self, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __repr__(self):
        return f"Jet(val={self.val!r})"


def _chain(a, f0, f1, f2):
    """Jet of ``F(a)`` given ``F``, ``F'``, ``F''`` evaluated at ``a.val``."""
    outer = a.grad[:, :, None] * a.grad[:, None, :]
    return Jet(f0, f1[:, None] * a.grad, f2[:, None, None] * outer + f1[:, None, None] * a.hess)


def reciprocal(a):
    if isinstance(a, Jet):
        if np.any(a.val == 0):
            raise DomainError("division by zero")
        r = 1.0 / a.val
        return _chain(a, r, -r * r, 2 * r * r * r)
    a = np.asarray(a, dtype=float)
    if np.any(a == 0):
        raise DomainError("division by zero")
    return 1.0 / a


def exp(a):
    if isinstance(a, Jet):
        e = np.exp(a.val)
        return _chain(a, e, e, e)
    return np.exp(a)


def log(a):
    v = a.val if isinstance(a, Jet) else np.asarray(a, dtype=float)
    if np.any(v <= 0):
        raise DomainError("log of a nonpositive value")
    if isinstance(a, Jet):
        r = 1.0 / v
        return _chain(a, np.log(v), r, -r * r)
    return np.log(v)


def sqrt(a):
    v = a.val if isinstance(a, Jet) else np.asarray(a, dtype=float)
    if np.any(v < 0):
        raise DomainError("sqrt of a negative value")
    if isinstance(a, Jet):
        if np.any(v == 0):
            raise DomainError("sqrt is not differentiable at 0")
        s = np.sqrt(v)
        return _chain(a, s, 0.5 / s, -0.25 / (s * v))
    return np.sqrt(v)


def sin(a):
    if isinstance(a, Jet):
        s, c = np.sin(a.val), np.cos(a.val)
        return _chain(a, s, c, -s)
    return np.sin(a)


def cos(a):
    if isinstance(a, Jet):
        s, c = np.sin(a.val), np.cos(a.val)
        return _chain(a, c, -s, -c)
    return np.cos(a)


def sinh(a):
    if isinstance(a, Jet):
        s, c = np.sinh(a.val), np.cosh(a.val)
        return _chain(a, s, c, s)
    return np.sinh(a)


def cosh(a):
    if isinstance(a, Jet):
        s, c = np.sinh(a.val), np.cosh(a.val)
        return _chain(a, c, s, c)
    return np.cosh(a)


FUNCTIONS = {
    "exp": exp,
    "log": log,
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "sqrt": sqrt,
}


def value(a):
    return a.val if isinstance(a, Jet) else a


def compose(values, grads, hesses, inner):
    """Jet of ``F(inner)`` from ambient derivatives of ``F`` at ``inner``.

    ``values`` (N,), ``grads`` (N, D), ``hesses`` (N, D, D) are the derivatives
    of ``F`` with respect to its D arguments; ``inner`` is a list of D jets.
    """
    G = np.stack([x.grad for x in inner], axis=1)  # (N, D, d)
    H = np.stack([x.hess for x in inner], axis=1)  # (N, D, d, d)
    grad = np.einsum("na,nai->ni", grads, G)
    hess = np.einsum("nab,nai,nbj->nij", hesses, G, G) + np.einsum("na,naij->nij", grads, H)
    return Jet(values, grad, hess)
