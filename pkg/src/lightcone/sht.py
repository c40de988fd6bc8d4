"""Real spherical-harmonic transform on a Gauss-Legendre x uniform grid (S^2).

Coefficients are a flat vector of length ``(lmax + 1)**2`` ordered by
``(l, m)`` with ``m = -l..l`` (index ``l*l + l + m``); the harmonics are
L^2-orthonormal, see :mod:`lightcone.kernels` for the exact convention.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .kernels import legendre_table
from .sphere import QuadratureRule


def sh_index(l, m):
    return l * l + l + m


def ncoeffs(lmax):
    return (lmax + 1) ** 2


def degrees(lmax):
    """Degree ``l`` of every coefficient slot."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])


def orders(lmax):
    return np.concatenate([np.arange(-l, l + 1) for l in range(lmax + 1)])


def sh_laplacian(coeffs, lmax=None):
    """Round-sphere Laplacian in coefficient space: multiply degree l by -l(l+1)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if lmax is None:
        lmax = int(round(math.sqrt(coeffs.size))) - 1
    l = degrees(lmax)
    return -(l * (l + 1.0)) * coeffs


class GridTooCoarse(ValueError):
    pass


@functools.lru_cache(maxsize=16)
def _index_maps(lmax):
    cos_idx = np.zeros((lmax + 1, lmax + 1), dtype=int)
    sin_idx = np.zeros((lmax + 1, lmax + 1), dtype=int)
    mask = np.zeros((lmax + 1, lmax + 1), dtype=bool)
    for m in range(lmax + 1):
        for l in range(m, lmax + 1):
            cos_idx[m, l] = sh_index(l, m)
            sin_idx[m, l] = sh_index(l, -m)
            mask[m, l] = True
    return cos_idx, sin_idx, mask


class SHGrid:
    """Analysis/synthesis between coefficients and an ``nlat x nlon`` grid.

    Latitudes are Gauss-Legendre nodes in ``z = cos(theta)`` (north first),
    longitudes ``2 pi k / nlon``. Analysis is exact for band-limited data when
    ``nlat >= lmax + 1`` and ``nlon > 2 lmax``.
    """

    def __init__(self, lmax=32, nlat=None, nlon=None):
        nlat = 2 * lmax if nlat is None else nlat
        nlon = 2 * nlat if nlon is None else nlon
        if nlat < lmax + 1 or nlon < 2 * lmax + 1 or (nlon % 2 == 0 and nlon // 2 <= lmax):
            raise GridTooCoarse(f"grid {nlat}x{nlon} cannot resolve lmax={lmax}; need at least {lmax + 1}x{2 * lmax + 1}")
        self.lmax = lmax
        self.nlat = nlat
        self.nlon = nlon
        z, w = np.polynomial.legendre.leggauss(nlat)
        self.z = z[::-1].copy()
        self.zweights = w[::-1].copy()
        self.phi = 2.0 * np.pi * np.arange(nlon) / nlon
        self.table = legendre_table(lmax, self.z)  # (nlat, m, l)
        self._wtable = self.table * self.zweights[:, None, None]
        self._cos, self._sin, self._mask = _index_maps(lmax)
        self._msin = np.arange(lmax + 1) > 0

    @property
    def shape(self):
        return (self.nlat, self.nlon)

    @property
    def ncoeffs(self):
        return ncoeffs(self.lmax)

    @functools.cached_property
    def points(self):
        """Grid nodes as unit vectors, shape (nlat * nlon, 3)."""
        s = np.sqrt(1.0 - self.z**2)
        return np.stack(
            [
                (s[:, None] * np.cos(self.phi)[None, :]).ravel(),
                (s[:, None] * np.sin(self.phi)[None, :]).ravel(),
                np.repeat(self.z, self.nlon),
            ],
            axis=1,
        )

    @functools.cached_property
    def weights(self):
        return np.repeat(self.zweights, self.nlon) * (2.0 * np.pi / self.nlon)

    @property
    def rule(self):
        return QuadratureRule(self.points, self.weights, "gauss-legendre x trapezoid", self.nlat, self.shape)

    def _split(self, coeffs):
        a = np.where(self._mask, coeffs[self._cos], 0.0)
        b = np.where(self._mask & self._msin[:, None], coeffs[self._sin], 0.0)
        return a, b

    def synthesize(self, coeffs):
        """Coefficients -> grid values (nlat, nlon)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.ncoeffs,):
            raise ValueError(f"expected {self.ncoeffs} coefficients, got {coeffs.shape}")
        a, b = self._split(coeffs)
        am = np.einsum("jml,ml->jm", self.table, a)
        bm = np.einsum("jml,ml->jm", self.table, b)
        n = self.nlon
        X = np.zeros((self.nlat, n // 2 + 1), dtype=complex)
        X[:, 0] = n * am[:, 0]
        X[:, 1 : self.lmax + 1] = 0.5 * n * (am[:, 1:] - 1j * bm[:, 1:])
        return np.fft.irfft(X, n=n, axis=1)

    def analyze(self, values):
        """Grid values -> coefficients (least-squares / quadrature projection)."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            values = values.reshape(self.shape)
        X = np.fft.rfft(values, axis=1)[:, : self.lmax + 1]
        n = self.nlon
        am = X.real * (2.0 * np.pi / n)
        bm = -X.imag * (2.0 * np.pi / n)
        wa = np.einsum("jml,jm->ml", self._wtable, am)
        wb = np.einsum("jml,jm->ml", self._wtable, bm)
        out = np.zeros(self.ncoeffs)
        out[self._cos[self._mask]] = wa[self._mask]
        smask = self._mask & self._msin[:, None]
        out[self._sin[smask]] = wb[smask]
        return out

    def laplacian(self, coeffs):
        return sh_laplacian(coeffs, self.lmax)


def write_coeffs(path, coeffs, lmax=None):
    """Write the text coefficient file (header ``shcoeffs n=2 lmax=L``)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if lmax is None:
        lmax = int(round(math.sqrt(coeffs.size))) - 1
    lines = [f"shcoeffs n=2 lmax={lmax}"]
    for l in range(lmax + 1):
        for m in range(-l, l + 1):
            lines.append(f"{l} {m} {float(coeffs[sh_index(l, m)])!r}")
    text = "\n".join(lines) + "\n"
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_coeffs(path_or_text):
    """Parse a coefficient file; returns ``(coeffs, lmax)``. Missing entries are 0."""
    if "\n" in path_or_text or path_or_text.startswith("shcoeffs"):
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()
    if header[0] != "shcoeffs":
        raise ValueError("missing 'shcoeffs' header")
    meta = dict(tok.split("=", 1) for tok in header[1:])
    if meta.get("n") != "2":
        raise ValueError("only n=2 coefficient files are supported")
    lmax = int(meta["lmax"])
    coeffs = np.zeros(ncoeffs(lmax))
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected '<l> <m> <value>'")
        l, m, v = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= l <= lmax and -l <= m <= l):
            raise ValueError(f"line {lineno}: (l, m) = ({l}, {m}) out of range for lmax={lmax}")
        coeffs[sh_index(l, m)] = v
    return coeffs, lmax
