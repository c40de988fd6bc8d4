"""Pseudospectral Levenberg-Marquardt solver for the constant-curvature equation on S^2 and Obata classification.

On S^2 the equation reads ``2 lap f = 2 (1 - k e^{2f})``. The unknown is a
real harmonic coefficient vector; nonlinear terms are evaluated on the
Gauss-Legendre grid and projected back (Galerkin residual). Each step solves

    min ||J D y + r||^2 + lam ||y||^2,   delta = D y,

matrix-free with LSQR, where ``J = lap + 2k P(e^{2f} .)`` and
``D = 1 / (l(l+1) + 1)`` is a right diagonal preconditioner. The damping
handles the three-dimensional near-kernel of ``J`` at solutions (the
tangent of the explicit solution family).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

from .conformal import equation_E_residual
from .fields import RotatedField, SpectralField, as_field, random_spectral_field
from .minkowski import minkowski_dot
from .sht import SHGrid, degrees
from .sphere import integrate, random_points, sphere_rule


@dataclass
class SolverConfig:
    k: float = 1.0
    lmax: int = 32
    nlat: int | None = None
    nlon: int | None = None
    tol: float = 1e-10
    max_iter: int = 60
    lam0: float = 1e-3
    lam_down: float = 0.3
    lam_up: float = 10.0
    lam_min: float = 1e-14
    lam_max: float = 1e8
    max_backtracks: int = 6
    max_step: float = 0.5
    balance_mean: bool = True
    lsqr_tol: float = 1e-14
    lsqr_iter: int = 400
    seed: int | None = None

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.lmax < 1:
            raise ValueError("lmax must be at least 1")
        self.nlat = 2 * self.lmax if self.nlat is None else self.nlat
        self.nlon = 2 * self.nlat if self.nlon is None else self.nlon
        if self.nlat < self.lmax + 1 or self.nlon < 2 * self.lmax + 1:
            raise ValueError("grid must be at least (lmax+1) x (2 lmax+1)")
        for name in ("tol", "lam0", "lsqr_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def grid(self):
        return SHGrid(self.lmax, self.nlat, self.nlon)


@dataclass
class SolveResult:
    field: SpectralField
    converged: bool
    iterations: int
    residual_max: float
    residual_history: list
    residual_max_history: list
    lam_history: list
    message: str
    config: SolverConfig
    wall_time: float = 0.0
    rejected_steps: int = 0

    def diagnostics(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_max": self.residual_max,
            "residual_history": self.residual_history,
            "residual_max_history": self.residual_max_history,
            "lambda_history": self.lam_history,
            "rejected_steps": self.rejected_steps,
            "message": self.message,
            "config": asdict(self.config),
        }


class _Problem:
    def __init__(self, config):
        self.cfg = config
        self.grid = config.grid()
        self.k = config.k
        deg = degrees(config.lmax).astype(float)
        self.lap = -deg * (deg + 1.0)
        self.precond = 1.0 / (deg * (deg + 1.0) + 1.0)

    def state(self, c):
        F = self.grid.synthesize(c)
        with np.errstate(over="ignore", invalid="ignore"):
            E = np.exp(2.0 * F)
        lapF = self.grid.synthesize(self.lap * c)
        q = lapF - 1.0 + self.k * E
        return E, q

    def residual(self, c):
        """(Galerkin residual, grid max of the full residual 2 lap f - 2(1 - k e^{2f}), weight field)."""
        E, q = self.state(c)
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(q))):
            return None, math.inf, None
        return self.grid.analyze(q), float(np.max(np.abs(2.0 * q))), E

    def jacobian(self, E):
        g, k, lap = self.grid, self.k, self.lap
        D = self.precond

        def mv(y):
            d = D * y
            return lap * d + 2.0 * k * g.analyze(E * g.synthesize(d))

        def rmv(z):
            # J is symmetric with an exact quadrature projection
            return D * (lap * z + 2.0 * k * g.analyze(E * g.synthesize(z)))

        n = lap.size
        return LinearOperator((n, n), matvec=mv, rmatvec=rmv, dtype=float)


def _initial_coeffs(f0, grid):
    if isinstance(f0, SpectralField) and f0.lmax == grid.lmax:
        return np.array(f0.coeffs)
    f0 = as_field(f0, 2)
    if isinstance(f0, SpectralField) and f0.lmax < grid.lmax:
        c = np.zeros(grid.ncoeffs)
        c[: f0.coeffs.size] = f0.coeffs
        return c
    vals = f0(grid.points).reshape(grid.shape)
    return grid.analyze(vals)


def _mean_shift(c, prob):
    """Constant ``s`` with ``k * mean(e^{2(f+s)}) = 1``, so the l = 0 residual starts at zero."""
    g = prob.grid
    with np.errstate(over="ignore"):
        m = g.analyze(np.exp(2.0 * g.synthesize(c)))[0] / math.sqrt(4.0 * math.pi)
    if not (math.isfinite(m) and m > 0):
        return 0.0
    return -0.5 * math.log(prob.k * m) * math.sqrt(4.0 * math.pi)


def solve_E(config=None, f0=0.0):
    """Solve ``2 lap f = 2 (1 - k e^{2f})`` on S^2 from the initial field ``f0``."""
    config = SolverConfig() if config is None else config
    t0 = time.perf_counter()
    prob = _Problem(config)
    c = _initial_coeffs(f0, prob.grid)
    if config.balance_mean:
        c[0] += _mean_shift(c, prob)
    r, rmax, E = prob.residual(c)
    if r is None:
        raise FloatingPointError("initial field overflows e^{2f}")
    rnorm = float(np.linalg.norm(r))
    lam = config.lam0
    hist, hist_max, lams = [rnorm], [rmax], [lam]
    rejected = 0
    it = 0
    message = "converged"
    while rmax >= config.tol:
        if it >= config.max_iter:
            message = f"not converged after {it} iterations"
            break
        it += 1
        J = prob.jacobian(E)
        accepted = False
        while not accepted:
            y = lsqr(J, -r, damp=math.sqrt(lam), atol=config.lsqr_tol, btol=config.lsqr_tol, iter_lim=config.lsqr_iter)[0]
            delta = prob.precond * y
            # cap the rms size of the update; a coefficient norm keeps steps rotation-equivariant
            size = float(np.linalg.norm(delta)) / math.sqrt(4.0 * math.pi)
            step = min(1.0, config.max_step / size) if size > 0 else 1.0
            lin = r + J.matvec(y)
            for _ in range(config.max_backtracks):
                cn = c + step * delta
                rn, rmax_n, En = prob.residual(cn)
                if rn is not None and float(np.linalg.norm(rn)) < rnorm:
                    accepted = True
                    break
                step *= 0.5
            if accepted:
                new_norm = float(np.linalg.norm(rn))
                # gain ratio of the actual to the linearly predicted decrease
                predicted = rnorm**2 - float(np.linalg.norm(r + step * (lin - r))) ** 2
                gain = (rnorm**2 - new_norm**2) / predicted if predicted > 0 else 0.0
                c, r, rmax, E, rnorm = cn, rn, rmax_n, En, new_norm
                if gain > 0.75:
                    lam = max(config.lam_min, lam * config.lam_down)
                elif gain < 0.25:
                    lam = min(config.lam_max, lam * config.lam_up)
            else:
                rejected += 1
                lam *= config.lam_up
                if lam > config.lam_max:
                    break
        lams.append(lam)
        hist.append(rnorm)
        hist_max.append(rmax)
        if not accepted:
            message = "damping exceeded its limit without a decreasing step"
            break
    converged = rmax < config.tol
    if not converged and message == "converged":
        message = "stalled"
    return SolveResult(
        field=SpectralField(c, config.lmax, name="solution"),
        converged=converged,
        iterations=it,
        residual_max=rmax,
        residual_history=hist,
        residual_max_history=hist_max,
        lam_history=lams,
        message=message,
        config=config,
        wall_time=time.perf_counter() - t0,
        rejected_steps=rejected,
    )


def independent_residual(f, k, rng=None, npts=2000, method="analytic"):
    """Max |2 lap f - 2(1 - k e^{2f})| at random off-grid points via the conformal formulas."""
    rng = np.random.default_rng(12345) if rng is None else rng
    X = random_points(2, npts, rng)
    return float(np.max(np.abs(equation_E_residual(f, k, X, n=2, method=method))))


# ---------------------------------------------------------------- classification


@dataclass
class ClassificationResult:
    v: np.ndarray | None
    k_hat: float
    rho: float
    in_family: bool
    c0: float = 0.0
    c: np.ndarray | None = None

    def to_dict(self):
        return {
            "v": None if self.v is None else self.v.tolist(),
            "k_hat": self.k_hat,
            "rho": self.rho,
            "in_family": self.in_family,
        }


RHO_TOL = 1e-6


def classify(f, rule=None, n=None):
    """Fit ``e^{-f}`` by ``sqrt(k)(-v0 + <vbar, x>)`` and measure the misfit."""
    f = as_field(f, n or 2)
    n = f.n
    rule = sphere_rule(n, 64 if n == 2 else 24) if rule is None else rule
    X = rule.nodes
    u = np.exp(-f(X))
    vol = float(np.sum(rule.weights))
    c0 = integrate(u, rule) / vol
    c = np.array([integrate(u * X[:, i], rule) for i in range(n + 1)]) / (vol / (n + 1))
    proj = c0 + X @ c
    rho = math.sqrt(integrate((u - proj) ** 2, rule) / integrate(u * u, rule))
    k_hat = c0 * c0 - float(c @ c)
    if k_hat <= 0:
        return ClassificationResult(None, k_hat, rho, False, c0, c)
    s = math.sqrt(k_hat)
    v = np.concatenate([[-c0 / s], c / s])
    in_family = rho < RHO_TOL and v[0] < 0 and abs(float(minkowski_dot(v, v)) + 1.0) < 1e-8
    return ClassificationResult(v, k_hat, rho, bool(in_family), c0, c)


# ---------------------------------------------------------------- linearization


def linearization_matrix(f, k, lmax=None, grid=None):
    """Dense Galerkin matrix of ``lap + 2k e^{2f}`` on harmonics up to ``lmax``."""
    f = as_field(f, 2)
    if lmax is None:
        lmax = f.lmax if isinstance(f, SpectralField) else 16
    grid = SHGrid(lmax) if grid is None else grid
    E = np.exp(2.0 * f(grid.points)).reshape(grid.shape)
    nc = grid.ncoeffs
    deg = degrees(lmax).astype(float)
    J = np.diag(-deg * (deg + 1.0))
    eye = np.eye(nc)
    for j in range(nc):
        J[:, j] += 2.0 * k * grid.analyze(E * grid.synthesize(eye[j]))
    return 0.5 * (J + J.T)


def kernel_spectrum(f, k, lmax=None, count=4):
    """Smallest-magnitude eigenvalues of the linearization (sorted by |lambda|)."""
    J = linearization_matrix(f, k, lmax)
    w, V = np.linalg.eigh(J)
    order = np.argsort(np.abs(w))
    w, V = w[order], V[:, order]
    lmax = int(round(math.sqrt(J.shape[0]))) - 1
    deg = degrees(lmax)
    dominant = [int(deg[np.argmax(np.abs(V[:, i]))]) for i in range(count)]
    return {"eigenvalues": w[:count].tolist(), "dominant_degree": dominant, "lmax": lmax}


# ---------------------------------------------------------------- helpers


def random_initial_field(seed, lmax=32, amplitude=0.5, content=4):
    rng = np.random.default_rng(seed)
    return random_spectral_field(rng, lmax=lmax, content=content, amplitude=amplitude)


def rotate_spectral(f, R, lmax=None):
    """Spectral coefficients of ``x -> f(R x)`` (exact for band-limited ``f``)."""
    lmax = f.lmax if lmax is None else lmax
    grid = SHGrid(lmax)
    rot = RotatedField(f, R)
    return SpectralField(grid.analyze(rot(grid.points).reshape(grid.shape)), lmax, name=f"rotated({f.name})")


@dataclass
class SweepRecord:
    seed: int
    k: float
    converged: bool
    iterations: int
    residual_max: float
    independent_residual: float | None
    classification: dict | None
    message: str
    wall_time: float


def sweep(ks=(0.5, 1.0, 4.0), seeds=range(20), lmax=32, amplitude=0.5, tol=1e-10, max_iter=60):
    """Solve from random band-limited data for every (k, seed) and classify each run."""
    out = []
    for k in ks:
        for seed in seeds:
            cfg = SolverConfig(k=k, lmax=lmax, tol=tol, max_iter=max_iter, seed=seed)
            res = solve_E(cfg, random_initial_field(seed, lmax, amplitude))
            ind = cls = None
            if res.converged:
                ind = independent_residual(res.field, k, np.random.default_rng(seed))
                cls = classify(res.field).to_dict()
            out.append(
                SweepRecord(seed, k, res.converged, res.iterations, res.residual_max, ind, cls, res.message, res.wall_time)
            )
    return out


def dumps(obj):
    return json.dumps(obj, sort_keys=True)
