"""Acceptance criteria, one test each, at the stated sample sizes and tolerances.

Every test prints a single ``PASS``/``FAIL`` line (visible even without
``-s``) and then asserts, so a failing criterion shows both the line and the
assertion detail.
"""

import json
import time

import numpy as np
import pytest

from pencilpres import preserver as P
from pencilpres.algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    identity,
    matrix_unit,
    nonzero_spectrum,
    random_element,
    random_invertible,
    random_quasinilpotent,
    random_rank_one,
    random_rank_stratified,
    zero,
)
from pencilpres.cli import main
from pencilpres.errors import PencilError
from pencilpres.rank_trace import (
    classical_rank_oracle,
    diagonal_trace,
    idempotent_decomposition,
    random_maximal_finite_rank,
    spectral_rank,
    trace,
)
from pencilpres.separation import separate_any, separate_invertible, separate_rank_one, subharmonic_scan, verify_witness
from pencilpres.serialize import dumps, element_to_json

ALGEBRAS = [BlockAlgebra([2]), BlockAlgebra([3]), BlockAlgebra([4]), BlockAlgebra([2, 3])]
FORM_ALGEBRAS = [BlockAlgebra([2]), BlockAlgebra([3]), BlockAlgebra([2, 2]), BlockAlgebra([2, 3])]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_rank_oracle(report):
    rng = np.random.default_rng(1)
    start, mismatches, total = time.perf_counter(), 0, 0
    for alg in ALGEBRAS:
        for _ in range(1000):
            a = random_rank_stratified(alg, rng)
            mismatches += spectral_rank(a, trials=8, seed=rng).rank != classical_rank_oracle(a)
            total += 1
    elapsed = time.perf_counter() - start
    report(1, mismatches == 0 and elapsed < 60,
           f"spectral rank = elimination rank on {total - mismatches}/{total} elements in {elapsed:.1f} s (limit 60 s)")


def test_criterion_02_trace(report):
    rng = np.random.default_rng(2)
    worst_diag = worst_comm = 0.0
    for i in range(1000):
        alg = ALGEBRAS[i % 4]
        a = random_element(alg, rng)
        worst_diag = max(worst_diag, abs(trace(a) - diagonal_trace(a)) / (1 + a.norm()))
        x, y = random_element(alg, rng), random_element(alg, rng)
        worst_comm = max(worst_comm, abs(trace(x @ y) - trace(y @ x)) / (1 + (x @ y).norm()))
    report(2, worst_diag <= 1e-8 and worst_comm <= 1e-8,
           f"max |tr a - diag| = {worst_diag:.1e}, max |tr(ab) - tr(ba)| = {worst_comm:.1e} (relative, limit 1e-8)")


def _nilpotent_rank_one(alg, rng):
    k = int(rng.integers(alg.num_blocks))
    n = alg.block_dims[k]
    e = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f -= (f @ e) / (e @ e) * e  # f^T e = 0
    blocks = [np.zeros((m, m), dtype=complex) for m in alg.block_dims]
    blocks[k] = np.outer(e, f)
    return AlgebraElement(alg, blocks)


def test_criterion_03_rank_one_trace(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(1000):
        alg = ALGEBRAS[i % 4]
        if i % 5 == 4:
            a = _nilpotent_rank_one(alg, rng)
            expected = 0j
        else:
            a = random_rank_one(alg, rng)
            nz = nonzero_spectrum(a)
            expected = nz[0] if nz else 0j
            assert len(nz) <= 1
        worst = max(worst, abs(trace(a) - expected))
    report(3, worst <= 1e-8, f"max |tr a - nonzero eigenvalue| = {worst:.1e} over 1000 rank-one elements (limit 1e-8)")


def test_criterion_04_separation(report):
    rng = np.random.default_rng(4)
    ok = {"any": 0, "invertible": 0, "rank1": 0}
    iterations = 0
    for i in range(500):
        alg = ALGEBRAS[i % 4]
        a, b = random_element(alg, rng), random_element(alg, rng)
        ok["any"] += verify_witness(separate_any(a, b, seed=rng), a, b)
        ok["invertible"] += verify_witness(separate_invertible(a, b, seed=rng), a, b)
        ai, bi = random_invertible(alg, rng), random_invertible(alg, rng)
        w = separate_rank_one(ai, bi, seed=rng)
        ok["rank1"] += verify_witness(w, ai, bi)
        iterations += w.search_iterations
    passed = all(v == 500 for v in ok.values()) and iterations == 0
    report(4, passed, f"verified witnesses {ok} of 500 each, rank-one search iterations = {iterations}")


def test_criterion_05_idempotents(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(200):
        alg = ALGEBRAS[i % 4]
        a = random_maximal_finite_rank(alg, 1 + i % min(3, alg.size), rng)
        worst = max(worst, max(idempotent_decomposition(a).residuals(a).values()))
    report(5, worst <= 1e-7, f"max decomposition residual = {worst:.1e} over 200 elements (limit 1e-7)")


def test_criterion_06_round_trip(report):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    failures, worst_u, worst_p, worst_map = [], 0.0, 0.0, 0.0
    for i in range(200):
        f = P.random_form(FORM_ALGEBRAS[i % 4], rng)
        phi = P.synthesize(f)
        try:
            g = P.reconstruct(phi, phi, seed=rng)
        except PencilError as exc:
            failures.append((i, type(exc).__name__))
            continue
        worst_u = max(worst_u, (g.u - f.u).norm())
        worst_p = max(worst_p, *(P.similarity_residual(p, q) for p, q in zip(g.similarities, f.similarities)))
        worst_map = max(worst_map, P.roundtrip_residual(g, phi, 100, rng))
        if g.perm != f.perm or g.flags != f.flags:
            failures.append((i, "perm/flags"))
    elapsed = time.perf_counter() - start
    passed = not failures and worst_u <= 1e-10 and worst_p <= 1e-7 and worst_map <= 1e-8 and elapsed < 120
    report(6, passed, f"200 forms, failures={failures[:3]}, |du|={worst_u:.1e}, similarity={worst_p:.1e}, "
                      f"map={worst_map:.1e}, {elapsed:.1f} s (limit 120 s)")


def test_criterion_07_refutation(report):
    deterministic = []
    for seed in range(10):
        for alg in FORM_ALGEBRAS:
            r = P.pencil_condition_check(P.identity_map(alg), P.transpose_map(alg), trials=0, seed=seed)
            deterministic.append(not r.passed and r.counterexample["origin"] == "matrix-unit probe")
    rates = {}
    for family in (P.additive_shift, P.quadratic_perturbation, P.rank_collapse):
        caught = 0
        for seed in range(100):
            rng = np.random.default_rng([7, seed])
            bad = family(P.synthesize(P.random_form(FORM_ALGEBRAS[seed % 4], rng)))
            caught += P.refute(bad, bad, 10_000, rng) is not None
        rates[family.__name__] = caught / 100
    passed = all(deterministic) and all(r >= 0.95 for r in rates.values())
    report(7, passed, f"transpose probe caught {sum(deterministic)}/{len(deterministic)}, refutation rates {rates} (min 0.95)")


def test_criterion_08_jordan(report):
    rng = np.random.default_rng(8)
    worst, failed = 0.0, 0
    for i in range(10):
        J = P.jordan_part(P.random_form(FORM_ALGEBRAS[i % 4], rng))
        r = P.jordan_verify(J, trials=100, seed=rng)
        worst = max(worst, r.max_residual)
        failed += not r.passed
    report(8, failed == 0, f"1000 probes over 10 Jordan maps, failing maps = {failed}, max square residual = {worst:.1e}")


def test_criterion_09_subharmonic(report):
    rng = np.random.default_rng(9)
    alg = BlockAlgebra([3])
    worst_margin = -np.inf
    for _ in range(100):
        c, q = random_element(alg, rng), random_element(alg, rng)
        center = complex(*rng.standard_normal(2))
        worst_margin = max(worst_margin, subharmonic_scan(c, q, center, 0.1 + 2 * rng.random(), 64).margin)
    worst_const = 0.0
    for _ in range(20):
        q = random_quasinilpotent(alg, rng)
        worst_const = max(worst_const, subharmonic_scan(zero(alg), q, complex(*rng.standard_normal(2))).constant_deviation)
    passed = worst_margin <= 1e-6 and worst_const <= DEFAULT_TOL.cluster_tol
    report(9, passed, f"max g(center) - circle mean = {worst_margin:.1e} (limit 1e-6), "
                      f"c = 0 deviation from rho(q) = {worst_const:.1e}")


def test_criterion_10_cli(report, tmp_path, capsys):
    M2, M3 = BlockAlgebra([2]), BlockAlgebra([3])

    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    one2 = write("one2.json", dumps(element_to_json(identity(M2))))
    one3 = write("one3.json", dumps(element_to_json(identity(M3))))
    e11 = write("e11.json", dumps(element_to_json(matrix_unit(M2, 0, 0, 0))))
    r1 = write("r1.json", dumps(element_to_json(random_element(M3, 1))))
    r2 = write("r2.json", dumps(element_to_json(random_element(M3, 2))))
    bad = write("bad.json", '{"schema":1,"block_dims":[2],"blocks":[[[[1,0],[0,0]],[[0,0]]]]}')

    def run(argv):
        code = main(argv)
        return code, capsys.readouterr().out

    determinism = []
    for argv in (["separate", r1, r2, "--mode", "invertible", "--seed", "5"],
                 ["rank", r1, "--seed", "5"],
                 ["suite", "--suite", "rank", "--scale", "0.05", "--seed", "5"],
                 ["preserver", "--reconstruct", "random:3", "random:3", "--algebra", "2,3", "--seed", "5"]):
        first, second = run(argv), run(argv)
        determinism.append(first == second and first[0] == 0 and json.loads(first[1])["schema"] == 1)
    negatives = {
        2: ["rank", bad],
        3: ["separate", e11, one2, "--mode", "rank1"],
        4: ["separate", one3, one3],
        5: ["preserver", "--reconstruct", "quadratic", "quadratic"],
        6: ["preserver", "--check", "identity", "transpose"],
    }
    codes = {want: run(argv)[0] for want, argv in negatives.items()}
    passed = all(determinism) and all(k == v for k, v in codes.items())
    report(10, passed, f"byte-identical reruns {sum(determinism)}/{len(determinism)}, exit codes expected->got {codes}")
