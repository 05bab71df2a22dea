import numpy as np
import pytest
from hypothesis import given

from conftest import algebras, diag, mat, seeds
from pencilpres.algebra import (
    DEFAULT_TOL,
    BlockAlgebra,
    Verdict,
    determinant_verdict,
    identity,
    is_invertible,
    random_element,
    random_invertible,
    random_quasinilpotent,
    zero,
)
from pencilpres.errors import InputsEqual, NotInvertible
from pencilpres.rank_trace import classical_rank_oracle
from pencilpres.separation import (
    Mode,
    SeparationWitness,
    radical_membership_test,
    separate_any,
    separate_invertible,
    separate_rank_one,
    subharmonic_scan,
    translate_verdicts,
    verify_witness,
)

M1, M2 = BlockAlgebra([1]), BlockAlgebra([2])


def _split(w):
    return {w.verdict_a, w.verdict_b} == {Verdict.INVERTIBLE, Verdict.SINGULAR}


class TestRankOne:
    def test_identity_vs_double(self):
        a, b = identity(M2), 2 * identity(M2)
        w = separate_rank_one(a, b)
        assert w.x == diag(-1, 0)
        assert (w.verdict_a, w.verdict_b) == (Verdict.SINGULAR, Verdict.INVERTIBLE)
        assert w.search_iterations == 0 and w.mode is Mode.RANK_ONE

    def test_sweep_picks_second_diagonal_entry(self):
        w = separate_rank_one(diag(1, 2), diag(1, 3))
        assert w.x == diag(0, -2)
        assert (w.verdict_a, w.verdict_b) == (Verdict.SINGULAR, Verdict.INVERTIBLE)

    @given(algebras, seeds)
    def test_constructive_on_invertible_pairs(self, alg, seed):
        rng = np.random.default_rng(seed)
        a, b = random_invertible(alg, rng), random_invertible(alg, rng)
        w = separate_rank_one(a, b, seed=rng)
        assert verify_witness(w, a, b)
        assert classical_rank_oracle(w.x) == 1 and w.search_iterations == 0
        # the same x works for the unrestricted problem
        relabeled = SeparationWitness(w.x, w.verdict_a, w.verdict_b, Mode.ANY)
        assert verify_witness(relabeled, a, b)

    def test_requires_invertible_inputs(self):
        with pytest.raises(NotInvertible):
            separate_rank_one(diag(1, 0), identity(M2))

    def test_equal_inputs(self):
        with pytest.raises(InputsEqual):
            separate_rank_one(identity(M2), identity(M2))


class TestAny:
    def test_scalar_example(self):
        a, b = zero(M1), identity(M1)
        w = separate_any(a, b)
        assert _split(w) and verify_witness(w, a, b)
        # x = 0 is already a witness here
        assert translate_verdicts(zero(M1), a, b, DEFAULT_TOL) == (Verdict.SINGULAR, Verdict.INVERTIBLE)

    @given(algebras, seeds)
    def test_random_pairs(self, alg, seed):
        rng = np.random.default_rng(seed)
        a, b = random_element(alg, rng), random_element(alg, rng)
        w = separate_any(a, b, seed=rng)
        assert w.mode is Mode.ANY and verify_witness(w, a, b)

    def test_singular_pair(self):
        a, b = diag(1, 0), diag(0, 1)
        assert verify_witness(separate_any(a, b), a, b)

    def test_equal_inputs(self):
        x = random_element(M2, 1)
        with pytest.raises(InputsEqual):
            separate_any(x, x + 1e-12 * identity(M2))


class TestInvertible:
    def test_scalar_example(self):
        w = separate_invertible(zero(M1), identity(M1))
        assert w.x == -1 * identity(M1)
        assert (w.verdict_a, w.verdict_b) == (Verdict.INVERTIBLE, Verdict.SINGULAR)

    def test_diagonal_example(self):
        a, b = diag(1, 0), zero(M2)
        w = separate_invertible(a, b)
        assert verify_witness(w, a, b)
        assert is_invertible(w.x) is Verdict.INVERTIBLE

    @given(algebras, seeds)
    def test_random_pairs(self, alg, seed):
        rng = np.random.default_rng(seed)
        a, b = random_invertible(alg, rng), random_invertible(alg, rng)
        w = separate_invertible(a, b, seed=rng)
        assert verify_witness(w, a, b) and determinant_verdict(w.x) is Verdict.INVERTIBLE

    def test_difference_in_one_block_only(self):
        alg = BlockAlgebra([2, 3])
        rng = np.random.default_rng(5)
        a = random_element(alg, rng)
        b = a + (identity(alg) - identity(alg)).with_block(1, np.eye(3))
        assert verify_witness(separate_invertible(a, b, seed=rng), a, b)


class TestVerify:
    def test_rejects_tampered_witness(self):
        a, b = identity(M2), 2 * identity(M2)
        w = separate_rank_one(a, b)
        assert not verify_witness(SeparationWitness(zero(M2), w.verdict_a, w.verdict_b, Mode.ANY), a, b)
        flipped = SeparationWitness(w.x, w.verdict_b, w.verdict_a, w.mode)
        assert not verify_witness(flipped, a, b)
        wrong_mode = SeparationWitness(w.x, w.verdict_a, w.verdict_b, Mode.INVERTIBLE)
        assert not verify_witness(wrong_mode, a, b)


class TestRadical:
    def test_zero_is_consistent(self):
        assert radical_membership_test(zero(M2)).radical_consistent

    @pytest.mark.parametrize("x", [identity(M2), mat([[0, 1], [0, 0]])])
    def test_examples_have_witness(self, x):
        res = radical_membership_test(x)
        assert not res.radical_consistent
        y = res.witness
        assert is_invertible(y) is Verdict.INVERTIBLE
        assert determinant_verdict(x + y, scale=x.norm() + y.norm()) is Verdict.SINGULAR

    @given(algebras, seeds)
    def test_nonzero_elements_are_outside_radical(self, alg, seed):
        x = random_element(alg, seed)
        res = radical_membership_test(x, seed=seed)
        assert not res.radical_consistent and res.samples_used >= 1


class TestSubharmonic:
    def test_quasinilpotent_constant(self):
        q = random_quasinilpotent(BlockAlgebra([3]), 2)
        rep = subharmonic_scan(zero(q.algebra), q, 1 + 1j, 2.0)
        assert rep.constant_deviation is not None and rep.constant_deviation <= 1e-7
        assert not rep.violation

    def test_modulus_example(self):
        rep = subharmonic_scan(identity(M1), zero(M1), 0j, 1.0)
        assert rep.center_value == pytest.approx(0) and rep.circle_mean == pytest.approx(1)
        assert not rep.violation

    @given(seeds)
    def test_random_circles_in_m3(self, seed):
        rng = np.random.default_rng(seed)
        alg = BlockAlgebra([3])
        c, q = random_element(alg, rng), random_element(alg, rng)
        rep = subharmonic_scan(c, q, complex(*rng.standard_normal(2)), 0.1 + 2 * rng.random())
        assert rep.margin <= 1e-6 and not rep.violation

    def test_csv(self):
        rep = subharmonic_scan(identity(M1), zero(M1), 0j, 1.0, samples=8)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "re,im,g" and len(lines) == 9
        assert all(len(line.split(",")) == 3 for line in lines[1:])

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            subharmonic_scan(identity(M1), zero(M1), samples=4)
