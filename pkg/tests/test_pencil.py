import numpy as np
import pytest
from hypothesis import given

from conftest import algebras, diag, mat, seeds
from pencilpres.algebra import BlockAlgebra, identity, matrix_unit, random_element, random_invertible, spectrum
from pencilpres.errors import AlgebraMismatch
from pencilpres.pencil import pencil_grid, pencil_spectrum


def _values(ps):
    return sorted((round(v.real, 9), round(v.imag, 9)) for v in ps.values)


def test_identity_pencil_examples():
    assert _values(pencil_spectrum(diag(1, 1), diag(-1, -2))) == [(1, 0), (2, 0)]
    assert _values(pencil_spectrum(diag(1, 1), diag(-3, -5))) == [(3, 0), (5, 0)]


def test_identically_singular():
    alg = BlockAlgebra([2])
    ps = pencil_spectrum(matrix_unit(alg, 0, 0, 0), matrix_unit(alg, 0, 0, 1))
    assert ps.identically_singular and ps.singular_blocks == (0,) and ps.entries == ()


def test_singular_leading_term_drops_infinite_roots():
    # det(lam E11 + 1) = lam + 1
    ps = pencil_spectrum(diag(1, 0), diag(1, 1))
    assert _values(ps) == [(-1, 0)]


def test_other_blocks_still_reported():
    alg = BlockAlgebra([2, 1])
    x = matrix_unit(alg, 0, 0, 0) + matrix_unit(alg, 1, 0, 0)
    y = matrix_unit(alg, 0, 0, 1) - 4 * matrix_unit(alg, 1, 0, 0)
    ps = pencil_spectrum(x, y)
    assert ps.identically_singular and ps.singular_blocks == (0,)
    assert _values(ps) == [(4, 0)]


@given(algebras, seeds)
def test_identity_pencil_is_spectrum(alg, seed):
    a = random_element(alg, seed)
    ps = pencil_spectrum(identity(alg), -a)
    s = spectrum(a)
    assert len(ps.entries) == len(s.entries)
    for (v, m), (w, k) in zip(ps.entries, s.entries):
        assert abs(v - w) <= 1e-7 and m == k


@given(algebras, seeds)
def test_roots_make_pencil_singular(alg, seed):
    rng = np.random.default_rng(seed)
    x, y = random_invertible(alg, rng), random_element(alg, rng)
    for lam in pencil_spectrum(x, y).values:
        m = (lam * x + y).to_dense()
        s = np.linalg.svd(m, compute_uv=False)
        assert s[-1] <= 1e-7 * (abs(lam) * x.norm() + y.norm())


def test_grid_marks_roots():
    grid = pencil_grid(diag(1, 1), diag(-1, 0), radius=1.0, points=3)
    verdicts = {(g["re"], g["im"]): g["verdict"] for g in grid}
    assert verdicts[(1.0, 0.0)] == "Singular" and verdicts[(0.0, 0.0)] == "Singular"
    assert verdicts[(-1.0, 0.0)] == "Invertible"
    assert len(grid) == 9


def test_mismatch():
    with pytest.raises(AlgebraMismatch):
        pencil_spectrum(identity(BlockAlgebra([2])), identity(BlockAlgebra([1, 1])))
