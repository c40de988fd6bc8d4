import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone.minkowski import ObataParameters, basis, causal_type, minkowski_dot

vec4 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4).map(np.array)


def test_signature_examples():
    e0 = basis(4, 0)
    assert minkowski_dot(e0, e0) == -1.0
    null = np.array([1.0, 1.0, 0.0, 0.0])
    assert minkowski_dot(null, null) == 0.0
    assert minkowski_dot(e0, basis(4, 1)) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        minkowski_dot(np.ones(4), np.ones(5))


def test_batched_product():
    a = np.random.default_rng(0).normal(size=(7, 5))
    out = minkowski_dot(a, a)
    assert out.shape == (7,)
    assert np.allclose(out, -a[:, 0] ** 2 + np.sum(a[:, 1:] ** 2, axis=1))


@given(vec4, vec4, vec4, st.floats(-3, 3))
def test_bilinear_symmetric(a, b, c, s):
    assert minkowski_dot(a, b) == pytest.approx(minkowski_dot(b, a))
    lhs = minkowski_dot(s * a + c, b)
    assert lhs == pytest.approx(s * minkowski_dot(a, b) + minkowski_dot(c, b), abs=1e-9)


@given(vec4, st.floats(1e-3, 1e3))
@settings(max_examples=200)
def test_causal_type_scale_invariant(a, s):
    assert causal_type(s * a) == causal_type(a)


def test_causal_types():
    assert causal_type(np.zeros(4)) == "zero"
    assert causal_type([1.0, 0, 0, 0]) == "timelike"
    assert causal_type([1.0, 0, 1.0, 0]) == "lightlike"
    assert causal_type([0.0, 0, 1.0, 0]) == "spacelike"


def test_obata_parameters_validation():
    ObataParameters(np.array([-1.0, 0, 0, 0]), 2.0)
    with pytest.raises(ValueError):
        ObataParameters(np.array([1.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        ObataParameters(np.array([-2.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        ObataParameters(np.array([-1.0, 0, 0, 0]), 0.0)


def test_random_parameters_are_valid(rng):
    for n in (2, 3, 4):
        p = ObataParameters.random(n, rng, max_boost=3.0)
        assert minkowski_dot(p.v, p.v) == pytest.approx(-1.0, abs=1e-12)
        assert p.v[0] < 0 and p.n == n
        assert p.denominator_bound > 0
