import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from lightcone.cli import run
from lightcone.fields import SpectralField


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _json(argv):
    code, out, _ = _run(argv + ["--no-meta", "--quiet"])
    return code, json.loads(out)


def test_conformal_report_poles():
    code, rep = _json(["conformal", "report", "--n", "2", "--field", "x3", "--points", "poles"])
    assert code == 0 and rep["pass"] is True
    assert set(rep) == {"command", "params", "results", "quadrature", "tolerances", "pass"}
    hh = rep["results"]["mean_curvature_sq"]
    assert hh[0] == pytest.approx(3 / math.e**2, abs=1e-12)
    assert hh[1] == pytest.approx(-math.e**2, abs=1e-12)


def test_solve_seed7():
    code, rep = _json(["solve", "--k", "1", "--seed", "7", "--lmax", "32"])
    assert code == 0
    assert rep["results"]["classification"]["in_family"] is True


def test_torus_audit():
    code, rep = _json(
        ["audit", "minkowski", "--example", "torus", "--R", "2", "--rho", "0.7", "--a", "1,0.3,0,0", "--grid", "256"]
    )
    assert code == 0 and rep["pass"]
    assert abs(rep["results"]["value"]) < 1e-6


def test_deterministic_output():
    argv = ["solve", "--k", "0.5", "--seed", "3", "--lmax", "16", "--no-meta", "--quiet"]
    a, b = _run(argv), _run(argv)
    assert a[0] == 0 and a[1] == b[1]


def test_meta_present_by_default():
    code, out, err = _run(["field", "eval", "--field", "x1", "--points", "poles"])
    rep = json.loads(out)
    assert "wall_time" in rep["meta"] and "pass" in err


def test_exit_codes():
    assert _run(["conformal", "report", "--field", "exp(", "--quiet"])[0] == 2
    assert _run(["frobnicate"])[0] == 2
    assert _run(["solve", "--k", "-1", "--quiet"])[0] == 2
    assert _run(["classify", "--field", "x3", "--quiet"])[0] == 1
    code, _, err = _run(["audit", "parallel", "--example", "torus", "--quiet"])
    assert code == 2 and "error" in err


def test_parse_error_reports_offset():
    code, _, err = _run(["field", "eval", "--field", "exp(", "--quiet"])
    assert code == 2 and "4" in err


def test_csv_format():
    code, out, _ = _run(["field", "eval", "--field", "x1+x3", "--points", "poles", "--format", "csv", "--no-meta", "--quiet"])
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "key,value"
    assert "pass,True" in lines


def test_out_and_coeffs(tmp_path):
    out = tmp_path / "r.json"
    cf = tmp_path / "c.npy"
    code, text, _ = _run(["solve", "--lmax", "16", "--seed", "1", "--out", str(out), "--save-coeffs", str(cf), "--quiet"])
    assert code == 0 and text == ""
    assert json.loads(out.read_text())["pass"] is True
    f = SpectralField.from_file(str(cf))
    code, rep = _json(["classify", "--coeffs", str(cf)])
    assert code == 0 and rep["results"]["in_family"] is True
    assert f.lmax == 16


def test_floats_roundtrip():
    code, rep = _json(["field", "eval", "--field", "0.1*x1 + exp(x2)", "--points", "random", "--npoints", "5", "--seed", "4"])
    X = np.array(rep["results"]["points"])
    assert np.array_equal(np.array(rep["results"]["value"]), 0.1 * X[:, 0] + np.exp(X[:, 1]))


def test_embed_and_classify_obata():
    code, rep = _json(["embed", "report", "--example", "snvr", "--v=-1.5,0.3,-0.4,0.6", "--r", "2", "--points", "random"])
    assert code == 0
    w = math.sqrt(1.61)
    code, rep = _json(["classify", "--field", f"-log({w!r} + 0.3*x1 - 0.4*x2 + 0.6*x3)"])
    assert code == 0 and rep["results"]["in_family"] is True
    assert rep["results"]["k_hat"] == pytest.approx(1.0, abs=1e-8)
    assert rep["results"]["v"] == pytest.approx([-w, 0.3, -0.4, 0.6], abs=1e-8)


def test_sweep_small():
    code, rep = _json(["sweep", "--k", "1", "--seeds", "2", "--lmax", "16"])
    assert code == 0


def test_numpy_fallback_selected():
    env = dict(os.environ, LIGHTCONE_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "from lightcone._accel import USE_NUMBA; print(USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "False"
