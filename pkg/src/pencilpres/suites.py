"""Seeded batch property suites, runnable from the command line.

Each invariant draws from its own generator, derived from the run seed and
the invariant's position, so one invariant's sample count never shifts
another's stream. With ``fault=True`` every library-side input is perturbed
by a random rank-one element, which the suites must then catch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    Tolerances,
    Verdict,
    determinant_verdict,
    identity,
    inverse,
    is_invertible,
    random_element,
    random_invertible,
    random_quasinilpotent,
    random_rank_one,
    random_rank_stratified,
    spectral_radius,
)
from .errors import PencilError
from .pencil import pencil_spectrum
from .rank_trace import (
    classical_rank_oracle,
    diagonal_trace,
    idempotent_decomposition,
    random_maximal_finite_rank,
    spectral_rank,
    trace,
)
from .separation import (
    radical_membership_test,
    separate_any,
    separate_invertible,
    separate_rank_one,
    subharmonic_scan,
    verify_witness,
)
from . import preserver as pres

SUITES = ("core", "rank", "separation", "preserver")


@dataclass
class InvariantResult:
    name: str
    passed: int = 0
    failed: int = 0
    first_failure: int | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failed": self.failed, "first_failure": self.first_failure}


@dataclass
class SuiteSummary:
    seed: int
    suites: list[str]
    results: list[InvariantResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.failed == 0 for r in self.results)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "seed": self.seed,
            "suites": list(self.suites),
            "invariants": [r.to_dict() for r in self.results],
            "all_passed": self.all_passed,
        }


class _Ctx:
    def __init__(self, rng, tol: Tolerances, fault: bool):
        self.rng, self.tol, self.fault = rng, tol, fault

    def corrupt(self, x: AlgebraElement) -> AlgebraElement:
        if not self.fault:
            return x
        return x + random_rank_one(x.algebra, self.rng, self.tol)


# core -----------------------------------------------------------------------

_ALGEBRAS = [BlockAlgebra([2]), BlockAlgebra([3]), BlockAlgebra([4]), BlockAlgebra([2, 3])]


def _trace_matches_diagonal(ctx: _Ctx, i: int) -> bool:
    a = random_element(_ALGEBRAS[i % 4], ctx.rng)
    return abs(trace(ctx.corrupt(a), ctx.tol) - diagonal_trace(a)) <= 1e-8 * (1 + a.norm())


def _verdict_routes_agree(ctx: _Ctx, i: int) -> bool:
    alg = _ALGEBRAS[i % 4]
    a = random_invertible(alg, ctx.rng) if i % 2 else random_rank_stratified(alg, ctx.rng)
    expected = Verdict.INVERTIBLE if classical_rank_oracle(a, ctx.tol) == alg.size else Verdict.SINGULAR
    return is_invertible(ctx.corrupt(a), ctx.tol) is expected and determinant_verdict(a, ctx.tol) is expected


def _inverse_residual(ctx: _Ctx, i: int) -> bool:
    a = random_invertible(_ALGEBRAS[i % 4], ctx.rng, ctx.tol, 1e4)
    return (ctx.corrupt(a) @ inverse(a, ctx.tol) - identity(a.algebra)).norm() <= 1e-8


def _quasinilpotent_radius(ctx: _Ctx, i: int) -> bool:
    q = random_quasinilpotent(_ALGEBRAS[i % 4], ctx.rng)
    return spectral_radius(ctx.corrupt(q), ctx.tol) <= ctx.tol.cluster_tol


def _pencil_matches_spectrum(ctx: _Ctx, i: int) -> bool:
    a = random_element(_ALGEBRAS[i % 4], ctx.rng)
    roots = pencil_spectrum(identity(a.algebra), -ctx.corrupt(a), ctx.tol).values
    eig = np.concatenate([np.linalg.eigvals(b) for b in a.blocks])
    return len(roots) == eig.size and all(np.min(np.abs(eig - r)) <= 1e-7 for r in roots)


# rank -----------------------------------------------------------------------


def _rank_oracle(ctx: _Ctx, i: int) -> bool:
    a = random_rank_stratified(_ALGEBRAS[i % 4], ctx.rng)
    return spectral_rank(ctx.corrupt(a), seed=ctx.rng, tol=ctx.tol).rank == classical_rank_oracle(a, ctx.tol)


def _trace_commutes(ctx: _Ctx, i: int) -> bool:
    alg = _ALGEBRAS[i % 4]
    a, b = random_element(alg, ctx.rng), random_element(alg, ctx.rng)
    return abs(trace(ctx.corrupt(a @ b), ctx.tol) - trace(b @ a, ctx.tol)) <= 1e-8 * (1 + (a @ b).norm())


def _idempotent_residuals(ctx: _Ctx, i: int) -> bool:
    alg = _ALGEBRAS[i % 4]
    a = random_maximal_finite_rank(alg, 1 + i % min(3, alg.size), ctx.rng)
    res = idempotent_decomposition(a, ctx.tol).residuals(ctx.corrupt(a))
    return max(res.values()) <= 1e-7


# separation -----------------------------------------------------------------


def _pair(ctx: _Ctx, i: int, invertible: bool):
    alg = _ALGEBRAS[i % 4]
    draw = random_invertible if invertible else random_element
    return draw(alg, ctx.rng), draw(alg, ctx.rng)


def _witness_check(fn, invertible: bool):
    def check(ctx: _Ctx, i: int) -> bool:
        a, b = _pair(ctx, i, invertible)
        if fn is separate_rank_one:
            w = fn(a, b, ctx.tol, ctx.rng)
        else:
            w = fn(a, b, seed=ctx.rng, tol=ctx.tol)
        return verify_witness(w, ctx.corrupt(a), b, ctx.tol)

    return check


def _radical_trivial(ctx: _Ctx, i: int) -> bool:
    x = random_element(_ALGEBRAS[i % 4], ctx.rng)
    result = radical_membership_test(x, seed=ctx.rng, tol=ctx.tol)
    y = ctx.corrupt(result.witness)
    return not result.radical_consistent and is_invertible(x + y, ctx.tol, x.norm() + y.norm()) is Verdict.SINGULAR


def _subharmonic(ctx: _Ctx, i: int) -> bool:
    alg = BlockAlgebra([3])
    c, q = random_element(alg, ctx.rng), random_element(alg, ctx.rng)
    center = complex(ctx.rng.standard_normal(), ctx.rng.standard_normal())
    report = subharmonic_scan(c, ctx.corrupt(q), center, 0.1 + ctx.rng.random(), 64, ctx.tol)
    return not report.violation


# preserver ------------------------------------------------------------------

_FORM_ALGEBRAS = [BlockAlgebra([2]), BlockAlgebra([3]), BlockAlgebra([2, 2]), BlockAlgebra([2, 3])]


def _maybe_corrupt_map(ctx: _Ctx, phi: pres.BlackBoxMap) -> pres.BlackBoxMap:
    return pres.additive_shift(phi) if ctx.fault else phi


def _round_trip(ctx: _Ctx, i: int) -> bool:
    f = pres.random_form(_FORM_ALGEBRAS[i % 4], ctx.rng)
    phi = pres.synthesize(f)
    try:
        g = pres.reconstruct(_maybe_corrupt_map(ctx, phi), phi, ctx.tol, ctx.rng)
    except PencilError:
        return False
    return (
        g.perm == f.perm
        and g.flags == f.flags
        and (g.u - f.u).norm() <= 1e-10
        and all(pres.similarity_residual(p, q) <= 1e-7 for p, q in zip(g.similarities, f.similarities))
        and pres.roundtrip_residual(g, phi, 20, ctx.rng) <= 1e-8
    )


def _synthesized_pass(ctx: _Ctx, i: int) -> bool:
    phi = _maybe_corrupt_map(ctx, pres.synthesize(pres.random_form(_FORM_ALGEBRAS[i % 4], ctx.rng)))
    reports = pres.lemma_battery(phi, phi, 10, ctx.rng, ctx.tol)
    reports.append(pres.pencil_condition_check(phi, phi, 200, ctx.rng, ctx.tol))
    return all(r.passed for r in reports)


def _corrupted_refuted(ctx: _Ctx, i: int) -> bool:
    alg = _FORM_ALGEBRAS[i % 4]
    base = pres.synthesize(pres.random_form(alg, ctx.rng))
    family = (pres.additive_shift, pres.quadratic_perturbation, pres.rank_collapse)[i % 3]
    bad = base if ctx.fault else family(base)
    return pres.refute(bad, bad, 2000, ctx.rng, ctx.tol) is not None


def _transpose_probe(ctx: _Ctx, i: int) -> bool:
    alg = _FORM_ALGEBRAS[i % 4]
    psi = pres.identity_map(alg) if ctx.fault else pres.transpose_map(alg)
    report = pres.pencil_condition_check(pres.identity_map(alg), psi, 0, ctx.rng, ctx.tol)
    return not report.passed and report.counterexample["origin"] == "matrix-unit probe"


def _jordan(ctx: _Ctx, i: int) -> bool:
    J = pres.jordan_part(pres.random_form(_FORM_ALGEBRAS[i % 4], ctx.rng))
    J = pres.quadratic_perturbation(J) if ctx.fault else J
    return pres.jordan_verify(J, 20, ctx.rng, ctx.tol).passed


# name, check, cases
REGISTRY: dict[str, list[tuple[str, Callable[[_Ctx, int], bool], int]]] = {
    "core": [
        ("trace_equals_diagonal_sum", _trace_matches_diagonal, 200),
        ("verdict_routes_agree_with_rank", _verdict_routes_agree, 200),
        ("inverse_residual", _inverse_residual, 100),
        ("quasinilpotent_radius_zero", _quasinilpotent_radius, 50),
        ("pencil_of_identity_is_spectrum", _pencil_matches_spectrum, 100),
    ],
    "rank": [
        ("spectral_rank_equals_oracle", _rank_oracle, 400),
        ("trace_ab_equals_trace_ba", _trace_commutes, 200),
        ("idempotent_decomposition_residuals", _idempotent_residuals, 60),
    ],
    "separation": [
        ("separate_any_verifies", _witness_check(separate_any, False), 50),
        ("separate_invertible_verifies", _witness_check(separate_invertible, False), 50),
        ("separate_rank_one_verifies", _witness_check(separate_rank_one, True), 50),
        ("radical_is_trivial", _radical_trivial, 30),
        ("submean_inequality", _subharmonic, 30),
    ],
    "preserver": [
        ("round_trip_recovers_form", _round_trip, 20),
        ("synthesized_maps_pass_checks", _synthesized_pass, 4),
        ("corrupted_maps_refuted", _corrupted_refuted, 6),
        ("transpose_mismatch_probe", _transpose_probe, 4),
        ("jordan_identity_holds", _jordan, 8),
    ],
}


def run_suites(
    names, seed: int = 0, tol: Tolerances = DEFAULT_TOL, fault: bool = False, scale: float = 1.0
) -> SuiteSummary:
    """Run the named suites; ``scale`` multiplies every case count."""
    names = list(SUITES) if "all" in names else list(names)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise ValueError(f"unknown suite(s): {unknown}")
    summary = SuiteSummary(seed, names)
    for suite in names:
        for idx, (name, check, cases) in enumerate(REGISTRY[suite]):
            ctx = _Ctx(np.random.default_rng([seed, SUITES.index(suite), idx]), tol, fault)
            result = InvariantResult(f"{suite}.{name}")
            for i in range(max(1, int(round(cases * scale)))):
                try:
                    ok = check(ctx, i)
                except PencilError:
                    ok = False
                if ok:
                    result.passed += 1
                else:
                    result.failed += 1
                    if result.first_failure is None:
                        result.first_failure = i
            summary.results.append(result)
    return summary
