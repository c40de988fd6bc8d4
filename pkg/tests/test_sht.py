import math

import numpy as np
import pytest

from lightcone.sht import GridTooCoarse, SHGrid, degrees, read_coeffs, sh_index, sh_laplacian, write_coeffs
from lightcone.kernels import legendre_table, sh_point_derivs


def test_round_trip(rng):
    grid = SHGrid(16)
    c = rng.normal(size=grid.ncoeffs)
    assert np.allclose(grid.analyze(grid.synthesize(c)), c, atol=1e-10)


def test_round_trip_minimal_grid(rng):
    grid = SHGrid(10, 11, 21)
    c = rng.normal(size=grid.ncoeffs)
    assert np.allclose(grid.analyze(grid.synthesize(c)), c, atol=1e-10)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        SHGrid(10, 8, 40)


def test_x3_single_coefficient():
    grid = SHGrid(8)
    c = grid.analyze(grid.points[:, 2].reshape(grid.shape))
    idx = sh_index(1, 0)
    # x3 = sqrt(4 pi / 3) Y_10
    assert c[idx] == pytest.approx(math.sqrt(4 * math.pi / 3), abs=1e-12)
    others = np.delete(c, idx)
    assert np.max(np.abs(others)) < 1e-12


def test_laplacian_eigenvalues():
    c = np.zeros(16)
    c[1:4] = 1.0
    out = sh_laplacian(c, 3)
    assert np.allclose(out[1:4], -2.0)
    deg = degrees(5)
    assert np.allclose(sh_laplacian(np.ones(36)), -deg * (deg + 1))


def test_orthonormality_by_quadrature():
    grid = SHGrid(6)
    eye = np.eye(grid.ncoeffs)
    vals = np.stack([grid.synthesize(e).ravel() for e in eye])
    gram = (vals * grid.weights) @ vals.T
    assert np.allclose(gram, np.eye(grid.ncoeffs), atol=1e-12)


def test_pointwise_kernel_matches_grid(rng):
    grid = SHGrid(12)
    c = rng.normal(size=grid.ncoeffs)
    val, _, _ = sh_point_derivs(c, 12, grid.points)
    assert np.allclose(val, grid.synthesize(c).ravel(), atol=1e-11)


def test_numba_and_numpy_kernels_agree(rng):
    c = rng.normal(size=81)
    X = rng.normal(size=(30, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    a = sh_point_derivs(c, 8, X, use_numba=True)
    b = sh_point_derivs(c, 8, X, use_numba=False)
    for u, v in zip(a, b):
        assert np.allclose(u, v, rtol=1e-13, atol=1e-12)
    z = np.linspace(-1, 1, 17)
    assert np.allclose(legendre_table(8, z, use_numba=True), legendre_table(8, z, use_numba=False))


def test_coefficient_file(tmp_path, rng):
    c = rng.normal(size=9)
    text = write_coeffs(None, c)
    assert text.splitlines()[0] == "shcoeffs n=2 lmax=2"
    back, lmax = read_coeffs(text)
    assert lmax == 2 and np.array_equal(back, c)
    path = tmp_path / "f.sh"
    write_coeffs(str(path), c)
    assert np.array_equal(read_coeffs(str(path))[0], c)


@pytest.mark.parametrize(
    "text",
    ["nope n=2 lmax=1\n", "shcoeffs n=3 lmax=1\n", "shcoeffs n=2 lmax=1\n2 0 1.0\n", "shcoeffs n=2 lmax=1\n1 0\n"],
)
def test_bad_coefficient_files(text):
    with pytest.raises(ValueError):
        read_coeffs(text)
