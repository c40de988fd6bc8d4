"""Hot loops for real spherical harmonics, with numba and numpy variants.

Real orthonormal harmonics, no Condon-Shortley phase, index ``l*l + l + m``::

    Y_l0  = P_l0(cos t)
    Y_lm  = sqrt(2) P_lm(cos t) cos(m p)     m > 0
    Y_l-m = sqrt(2) P_lm(cos t) sin(m p)     m > 0

where ``P_lm`` are the fully normalized associated Legendre functions.
Writing ``P_lm(cos t) = q_lm(z) sin(t)**m`` and ``sin(t)**m exp(i m p) =
(x + i y)**m`` turns every ``Y_lm`` into a polynomial in the ambient
coordinates, which is what :func:`sh_point_derivs` differentiates. The
polynomial form has no pole singularity.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit


def _recurrence_coeffs(lmax):
    a = np.zeros((lmax + 1, lmax + 1))
    b = np.zeros((lmax + 1, lmax + 1))
    for m in range(lmax + 1):
        for l in range(m + 2, lmax + 1):
            a[m, l] = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b[m, l] = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
    diag = np.zeros(lmax + 1)
    diag[0] = math.sqrt(1.0 / (4.0 * math.pi))
    for m in range(1, lmax + 1):
        diag[m] = diag[m - 1] * math.sqrt((2.0 * m + 1.0) / (2.0 * m))
    return a, b, diag


# ---------------------------------------------------------------- Legendre table


@njit(cache=True)
def _legendre_table_nb(lmax, z, s, a, b, diag):
    nz = z.shape[0]
    out = np.zeros((nz, lmax + 1, lmax + 1))
    for j in range(nz):
        sm = 1.0
        for m in range(lmax + 1):
            scale = diag[m] * sm
            if m > 0:
                scale *= math.sqrt(2.0)
            q2 = 1.0
            out[j, m, m] = scale
            if m + 1 <= lmax:
                q1 = math.sqrt(2.0 * m + 3.0) * z[j]
                out[j, m, m + 1] = scale * q1
                for l in range(m + 2, lmax + 1):
                    q = a[m, l] * (z[j] * q1 - b[m, l] * q2)
                    out[j, m, l] = scale * q
                    q2 = q1
                    q1 = q
            sm *= s[j]
    return out


def _legendre_table_np(lmax, z, s, a, b, diag):
    nz = z.shape[0]
    out = np.zeros((nz, lmax + 1, lmax + 1))
    sm = np.ones(nz)
    for m in range(lmax + 1):
        scale = diag[m] * sm * (math.sqrt(2.0) if m > 0 else 1.0)
        q2 = np.ones(nz)
        out[:, m, m] = scale
        if m + 1 <= lmax:
            q1 = math.sqrt(2.0 * m + 3.0) * z
            out[:, m, m + 1] = scale * q1
            for l in range(m + 2, lmax + 1):
                q = a[m, l] * (z * q1 - b[m, l] * q2)
                out[:, m, l] = scale * q
                q2, q1 = q1, q
        sm = sm * s
    return out


def legendre_table(lmax, z, use_numba=None):
    """Normalized ``P_lm(z)`` (times sqrt(2) for m > 0) as ``(len(z), m, l)``.

    Entries with ``l < m`` are zero.
    """
    z = np.ascontiguousarray(z, dtype=float)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    a, b, diag = _recurrence_coeffs(lmax)
    if USE_NUMBA if use_numba is None else use_numba:
        return _legendre_table_nb(lmax, z, s, a, b, diag)
    return _legendre_table_np(lmax, z, s, a, b, diag)


# ------------------------------------------------- pointwise value + derivatives


@njit(cache=True)
def _sh_point_derivs_nb(coeffs, lmax, X, a, b, diag):
    npts = X.shape[0]
    val = np.zeros(npts)
    grad = np.zeros((npts, 3))
    hess = np.zeros((npts, 3, 3))
    C = np.zeros(lmax + 1)
    S = np.zeros(lmax + 1)
    for p in range(npts):
        x = X[p, 0]
        y = X[p, 1]
        z = X[p, 2]
        C[0] = 1.0
        S[0] = 0.0
        for m in range(1, lmax + 1):
            C[m] = C[m - 1] * x - S[m - 1] * y
            S[m] = C[m - 1] * y + S[m - 1] * x
        f = 0.0
        fx = 0.0
        fy = 0.0
        fz = 0.0
        fxx = 0.0
        fxy = 0.0
        fyy = 0.0
        fxz = 0.0
        fyz = 0.0
        fzz = 0.0
        for m in range(lmax + 1):
            scale = diag[m]
            if m > 0:
                scale *= math.sqrt(2.0)
            # accumulate sum_l c_l q_l, its z-derivatives, separately for cos and sin parts
            ac = 0.0
            ac1 = 0.0
            ac2 = 0.0
            as_ = 0.0
            as1 = 0.0
            as2 = 0.0
            q2 = 1.0
            d2 = 0.0
            e2 = 0.0
            base = m * m + m
            ac += coeffs[base + m] * q2
            if m > 0:
                as_ += coeffs[base - m] * q2
            if m + 1 <= lmax:
                r = math.sqrt(2.0 * m + 3.0)
                q1 = r * z
                d1 = r
                e1 = 0.0
                base = (m + 1) * (m + 1) + (m + 1)
                ac += coeffs[base + m] * q1
                ac1 += coeffs[base + m] * d1
                if m > 0:
                    as_ += coeffs[base - m] * q1
                    as1 += coeffs[base - m] * d1
                for l in range(m + 2, lmax + 1):
                    al = a[m, l]
                    bl = b[m, l]
                    q = al * (z * q1 - bl * q2)
                    d = al * (q1 + z * d1 - bl * d2)
                    e = al * (2.0 * d1 + z * e1 - bl * e2)
                    base = l * l + l
                    cc = coeffs[base + m]
                    ac += cc * q
                    ac1 += cc * d
                    ac2 += cc * e
                    if m > 0:
                        cs = coeffs[base - m]
                        as_ += cs * q
                        as1 += cs * d
                        as2 += cs * e
                    q2 = q1
                    q1 = q
                    d2 = d1
                    d1 = d
                    e2 = e1
                    e1 = e
            ac *= scale
            ac1 *= scale
            ac2 *= scale
            as_ *= scale
            as1 *= scale
            as2 *= scale
            # trigonometric polynomial T = C_m (cos part) or S_m (sin part)
            Tc = C[m]
            Ts = S[m]
            if m >= 1:
                Tcx = m * C[m - 1]
                Tsx = m * S[m - 1]
                Tcy = -m * S[m - 1]
                Tsy = m * C[m - 1]
            else:
                Tcx = 0.0
                Tsx = 0.0
                Tcy = 0.0
                Tsy = 0.0
            if m >= 2:
                k = m * (m - 1)
                Tcxx = k * C[m - 2]
                Tsxx = k * S[m - 2]
                Tcxy = -k * S[m - 2]
                Tsxy = k * C[m - 2]
            else:
                Tcxx = 0.0
                Tsxx = 0.0
                Tcxy = 0.0
                Tsxy = 0.0
            f += ac * Tc + as_ * Ts
            fx += ac * Tcx + as_ * Tsx
            fy += ac * Tcy + as_ * Tsy
            fz += ac1 * Tc + as1 * Ts
            fxx += ac * Tcxx + as_ * Tsxx
            fxy += ac * Tcxy + as_ * Tsxy
            fyy -= ac * Tcxx + as_ * Tsxx
            fxz += ac1 * Tcx + as1 * Tsx
            fyz += ac1 * Tcy + as1 * Tsy
            fzz += ac2 * Tc + as2 * Ts
        val[p] = f
        grad[p, 0] = fx
        grad[p, 1] = fy
        grad[p, 2] = fz
        hess[p, 0, 0] = fxx
        hess[p, 0, 1] = fxy
        hess[p, 1, 0] = fxy
        hess[p, 1, 1] = fyy
        hess[p, 0, 2] = fxz
        hess[p, 2, 0] = fxz
        hess[p, 1, 2] = fyz
        hess[p, 2, 1] = fyz
        hess[p, 2, 2] = fzz
    return val, grad, hess


def _sh_point_derivs_np(coeffs, lmax, X, a, b, diag):
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    npts = X.shape[0]
    C = [np.ones(npts)]
    S = [np.zeros(npts)]
    for m in range(1, lmax + 1):
        C.append(C[-1] * x - S[-1] * y)
        S.append(C[-2] * y + S[-1] * x)
    f = np.zeros(npts)
    g = np.zeros((npts, 3))
    h = np.zeros((npts, 3, 3))
    zeros = np.zeros(npts)
    for m in range(lmax + 1):
        scale = diag[m] * (math.sqrt(2.0) if m > 0 else 1.0)
        acc = np.zeros((2, 3, npts))  # [cos|sin][q, q', q'']
        q2, d2, e2 = np.ones(npts), zeros, zeros

        def add(l, q, d, e):
            base = l * l + l
            acc[0, 0] += coeffs[base + m] * q
            acc[0, 1] += coeffs[base + m] * d
            acc[0, 2] += coeffs[base + m] * e
            if m > 0:
                acc[1, 0] += coeffs[base - m] * q
                acc[1, 1] += coeffs[base - m] * d
                acc[1, 2] += coeffs[base - m] * e

        add(m, q2, d2, e2)
        if m + 1 <= lmax:
            r = math.sqrt(2.0 * m + 3.0)
            q1, d1, e1 = r * z, np.full(npts, r), zeros
            add(m + 1, q1, d1, e1)
            for l in range(m + 2, lmax + 1):
                al, bl = a[m, l], b[m, l]
                q = al * (z * q1 - bl * q2)
                d = al * (q1 + z * d1 - bl * d2)
                e = al * (2.0 * d1 + z * e1 - bl * e2)
                add(l, q, d, e)
                q2, q1, d2, d1, e2, e1 = q1, q, d1, d, e1, e
        acc *= scale
        for part, T in ((0, C), (1, S)):
            if part == 1 and m == 0:
                continue
            q, dq, ddq = acc[part]
            t = T[m]
            sign = 1.0 if part == 0 else -1.0
            # d/dx w^m = m w^(m-1), d/dy w^m = i m w^(m-1)
            other = S if part == 0 else C
            tx = m * T[m - 1] if m >= 1 else zeros
            ty = -sign * m * other[m - 1] if m >= 1 else zeros
            txx = m * (m - 1) * T[m - 2] if m >= 2 else zeros
            txy = -sign * m * (m - 1) * other[m - 2] if m >= 2 else zeros
            f += q * t
            g[:, 0] += q * tx
            g[:, 1] += q * ty
            g[:, 2] += dq * t
            h[:, 0, 0] += q * txx
            h[:, 0, 1] += q * txy
            h[:, 1, 1] -= q * txx
            h[:, 0, 2] += dq * tx
            h[:, 1, 2] += dq * ty
            h[:, 2, 2] += ddq * t
    h[:, 1, 0] = h[:, 0, 1]
    h[:, 2, 0] = h[:, 0, 2]
    h[:, 2, 1] = h[:, 1, 2]
    return f, g, h


def sh_point_derivs(coeffs, lmax, X, use_numba=None):
    """Value, ambient gradient and ambient Hessian of ``sum c_lm Y_lm``.

    ``X`` has shape (N, 3); the polynomial extension is differentiated, so
    the points need not lie exactly on the sphere.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    X = np.ascontiguousarray(X, dtype=float).reshape(-1, 3)
    a, b, diag = _recurrence_coeffs(lmax)
    if USE_NUMBA if use_numba is None else use_numba:
        return _sh_point_derivs_nb(coeffs, lmax, X, a, b, diag)
    return _sh_point_derivs_np(coeffs, lmax, X, a, b, diag)
