"""The compiled kernels and the NumPy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pencilpres import _pykernels, kernels
from pencilpres.rank_trace import COEFF_TRUNCATION, _interpolation_data

ck = pytest.importorskip("pencilpres._ckernels")


def _pair(n, seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return y, a


def _match_roots(r1, r2, tol):
    assert r1.size == r2.size
    for r in r1:
        assert np.min(np.abs(r2 - r)) <= tol * (1 + abs(r))


@given(st.integers(1, 10), st.integers(0, 2**31))
def test_batch_det(n, seed):
    y, _ = _pair(n, seed)
    mats = np.stack([y, y.T, 2 * y])
    assert np.allclose(ck.batch_det(mats), _pykernels.batch_det(mats), rtol=1e-10)


@given(st.integers(1, 8), st.integers(0, 2**31))
def test_det_poly_coeffs(n, seed):
    y, a = _pair(n, seed)
    nodes, vinv = _interpolation_data(n)
    c1 = ck.det_poly_coeffs(y, a, nodes, vinv)
    c2 = _pykernels.det_poly_coeffs(y, a, nodes, vinv)
    assert np.allclose(c1, c2, rtol=1e-9, atol=1e-12 * np.abs(c2).max())


@given(st.integers(1, 8), st.integers(0, 2**31))
def test_pencil_roots(n, seed):
    y, a = _pair(n, seed)
    nodes, vinv = _interpolation_data(n)
    r1, d1 = ck.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION)
    r2, d2 = _pykernels.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION)
    assert d1 == d2 is False
    _match_roots(np.asarray(r1), np.asarray(r2), 1e-7)


def test_degenerate_flag():
    nodes, vinv = _interpolation_data(2)
    e11 = np.diag([1.0, 0]).astype(complex)
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    for impl in (ck, _pykernels):
        _, degenerate = impl.pencil_roots(e12, e11, nodes, vinv, COEFF_TRUNCATION)
        assert degenerate


def test_read_only_inputs():
    y, a = _pair(3, 0)
    y.setflags(write=False)
    a.setflags(write=False)
    nodes, vinv = _interpolation_data(3)
    ck.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION)


def test_large_blocks_go_to_numpy():
    y, a = _pair(kernels.LARGE_BLOCK + 2, 1)
    nodes, vinv = _interpolation_data(y.shape[0])
    r1, _ = kernels.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION)
    r2, _ = _pykernels.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION)
    assert np.array_equal(np.sort_complex(r1), np.sort_complex(r2))


def test_fallback_selected_by_environment():
    code = "from pencilpres.kernels import BACKEND; print(BACKEND)"
    env = dict(os.environ, PENCILPRES_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    if os.environ.get("PENCILPRES_PURE_PYTHON", "") not in ("1", "true", "yes"):
        assert kernels.BACKEND == "cython"
