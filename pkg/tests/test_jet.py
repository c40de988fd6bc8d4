import numpy as np
import pytest

from lightcone import jet
from lightcone.jet import Jet


def _fd_check(fn, X, h=1e-5):
    out = fn(Jet.variables(X))
    d = X.shape[1]
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        gp = fn([X[:, i] for i in range(d)] if False else list((X + e).T))
        gm = fn(list((X - e).T))
        assert np.allclose(out.grad[:, a], (gp - gm) / (2 * h), atol=1e-7)
    return out


@pytest.mark.parametrize(
    "fn",
    [
        lambda x: jet.exp(x[0] * x[1]) + x[2] ** 3,
        lambda x: jet.log(2.0 + x[0]) * jet.sqrt(3.0 + x[1]),
        lambda x: jet.sin(x[0]) * jet.cos(x[1]) - jet.sinh(x[2]) / jet.cosh(x[0]),
        lambda x: 2.0 ** x[0] + x[1] * 0.5 - 1.0 / (2.0 + x[2]),
    ],
)
def test_gradient_matches_differences(fn, rng):
    X = rng.uniform(-0.5, 0.5, size=(6, 3))
    _fd_check(fn, X)


def test_hessian_of_product(rng):
    X = rng.normal(size=(4, 3))
    out = (lambda x: x[0] * x[1] * x[2])(Jet.variables(X))
    H = out.hess
    assert np.allclose(H[:, 0, 1], X[:, 2])
    assert np.allclose(H[:, 0, 0], 0.0)
    assert np.allclose(H, H.transpose(0, 2, 1))


def test_numpy_scalar_defers_to_jet():
    x = Jet.variables(np.array([[1.0, 2.0]]))[0]
    y = np.float64(2.0) * x
    assert isinstance(y, Jet)
    assert np.allclose(y.grad, [[2.0, 0.0]])
