import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from lightcone.conformal import obata_field
from lightcone.fields import SpectralField, random_spectral_field
from lightcone.minkowski import ObataParameters
from lightcone.sht import SHGrid
from lightcone.solver import (
    SolverConfig,
    classify,
    independent_residual,
    kernel_spectrum,
    random_initial_field,
    rotate_spectral,
    solve_E,
    sweep,
)


def _project(f, lmax=16):
    g = SHGrid(lmax)
    return SpectralField(g.analyze(f(g.points).reshape(g.shape)), lmax)


def test_zero_is_a_solution():
    res = solve_E(SolverConfig(k=1.0, lmax=8), 0.0)
    assert res.converged and res.iterations == 0
    assert res.residual_max < 1e-12


def test_height_perturbation_converges():
    res = solve_E(SolverConfig(k=1.0, lmax=16), "0.3*x3")
    assert res.converged
    assert independent_residual(res.field, 1.0) < 1e-9
    assert classify(res.field).in_family


@pytest.mark.parametrize("k", [0.5, 4.0])
def test_scaling_symmetry(k):
    f0 = random_initial_field(3, lmax=16)
    a = solve_E(SolverConfig(k=1.0, lmax=16), f0)
    b = solve_E(SolverConfig(k=k, lmax=16), f0)
    assert a.converged and b.converged
    X = np.random.default_rng(0).normal(size=(50, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.allclose(b.field(X), a.field(X) - 0.5 * math.log(k), atol=1e-8)


def test_residual_history_decreases():
    res = solve_E(SolverConfig(k=1.0, lmax=16), random_initial_field(11, lmax=16))
    h = res.residual_history
    assert res.converged
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_without_mean_balancing():
    res = solve_E(SolverConfig(k=1.0, lmax=16, balance_mean=False), random_initial_field(2, lmax=16, amplitude=0.3))
    assert res.converged


def test_classify_obata(rng):
    for _ in range(100):
        p = ObataParameters.random(2, rng, max_boost=1.0)
        k = float(rng.uniform(0.3, 3.0))
        c = classify(obata_field(ObataParameters(p.v, k)))
        assert c.in_family
        assert np.allclose(c.v, p.v, atol=1e-8)
        assert c.k_hat == pytest.approx(k, rel=1e-8)


def test_classify_rejects_height():
    c = classify("x3")
    assert not c.in_family and c.rho > 1e-2


def test_classify_spectral_projection(rng):
    p = ObataParameters.random(2, rng, max_boost=0.5)
    c = classify(_project(obata_field(p), 24))
    assert c.in_family


def test_solution_equivariance():
    f0 = random_initial_field(5, lmax=16)
    R = Rotation.random(random_state=1).as_matrix()
    a = solve_E(SolverConfig(lmax=16), f0)
    b = solve_E(SolverConfig(lmax=16), rotate_spectral(f0, R))
    assert a.converged and b.converged
    X = np.random.default_rng(1).normal(size=(40, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.allclose(b.field(X), a.field(X @ R.T), atol=1e-9)
    ca, cb = classify(a.field), classify(b.field)
    assert np.allclose(cb.v[1:], R.T @ ca.v[1:], atol=1e-6)
    assert cb.k_hat == pytest.approx(ca.k_hat, abs=1e-6)


def test_kernel_at_obata(rng):
    p = ObataParameters.random(2, rng, max_boost=0.8)
    spec = kernel_spectrum(obata_field(p), p.k, lmax=16)
    w = np.abs(spec["eigenvalues"])
    assert np.all(w[:3] < 1e-6) and w[3] > 1e-2


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(k=0.0)
    with pytest.raises(ValueError):
        SolverConfig(lmax=0)
    with pytest.raises(ValueError):
        SolverConfig(lmax=16, nlat=8)
    with pytest.raises(ValueError):
        SolverConfig(tol=-1.0)


def test_diagnostics_serializable():
    import json

    res = solve_E(SolverConfig(lmax=16), "0.1*x1")
    d = json.loads(json.dumps(res.diagnostics()))
    assert d["converged"] and d["config"]["lmax"] == 16


def test_small_sweep():
    recs = sweep(ks=(1.0,), seeds=range(2), lmax=16)
    assert all(r.converged and r.classification["in_family"] for r in recs)
