"""Maps preserving invertibility of linear pencils: synthesis, checks, recovery.

A pair ``phi, psi: A -> B`` preserves invertibility of pencils when
``lam x + y`` is invertible exactly when ``lam phi(x) + psi(y)`` is. Such
pairs are ``phi = psi = u J`` with ``J`` a Jordan isomorphism; between block
matrix algebras ``J`` permutes equal-sized blocks and acts on each by
``x -> p x p^-1`` or ``x -> p x^T p^-1``.

The checkers below sample at random and therefore can only refute; a report
without counterexample is evidence, not proof.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    Tolerances,
    Verdict,
    _gaussian,
    as_rng,
    block_singular_ratios,
    central_idempotent,
    classify_ratio,
    combine_verdicts,
    identity,
    inverse,
    is_invertible,
    matrix_unit,
    random_element,
    random_invertible,
    random_of_rank,
    random_rank_one,
    random_rank_stratified,
    spectrum,
    zero,
)
from .errors import (
    InvalidForm,
    NeitherMultiplicativeNorAnti,
    NotUnital,
    PermutationAmbiguous,
    PsiMismatch,
    ReconstructionError,
    SimilarityInconsistent,
)
from .rank_trace import spectral_rank


class Flag(enum.Enum):
    IDENTITY = "I"
    TRANSPOSE = "T"


@dataclass(frozen=True)
class BlackBoxMap:
    """An opaque map between block algebras.

    ``thread_safe`` declares whether ``fn`` may be called concurrently;
    checkers in this module evaluate sequentially either way.
    """

    domain: BlockAlgebra
    codomain: BlockAlgebra
    fn: Callable[[AlgebraElement], AlgebraElement]
    name: str = "map"
    thread_safe: bool = True

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        if x.algebra != self.domain:
            raise ValueError(f"{self.name}: argument lives in {x.algebra!r}, expected {self.domain!r}")
        out = self.fn(x)
        if out.algebra != self.codomain:
            raise ValueError(f"{self.name}: output lives in {out.algebra!r}, expected {self.codomain!r}")
        return out


# forms --------------------------------------------------------------------


@dataclass(frozen=True)
class PreserverForm:
    """``phi(x) = u J(x)`` with ``J(x)[perm[i]] = p_i (x_i or x_i^T) p_i^-1``.

    ``perm[i]`` is the codomain block receiving domain block ``i`` (0-based).
    """

    u: AlgebraElement
    perm: tuple[int, ...]
    flags: tuple[Flag, ...]
    similarities: tuple[np.ndarray, ...]

    @property
    def domain(self) -> BlockAlgebra:
        return BlockAlgebra(p.shape[0] for p in self.similarities)

    @property
    def codomain(self) -> BlockAlgebra:
        return self.u.algebra

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        k = len(self.similarities)
        if len(self.perm) != k or len(self.flags) != k:
            raise InvalidForm("perm, flags and p must have one entry per block")
        if sorted(self.perm) != list(range(k)):
            raise InvalidForm(f"perm {list(self.perm)} is not a permutation of 0..{k - 1}")
        if self.u.algebra.num_blocks != k:
            raise InvalidForm("u must have as many blocks as the domain")
        for i, p in enumerate(self.similarities):
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise InvalidForm(f"p[{i}] must be square")
            if self.u.algebra.block_dims[self.perm[i]] != p.shape[0]:
                raise InvalidForm(f"block {i} of size {p.shape[0]} sent to a block of another size")
            sub = AlgebraElement(BlockAlgebra([p.shape[0]]), [p])
            if is_invertible(sub, tol) is not Verdict.INVERTIBLE:
                raise InvalidForm(f"p[{i}] is not invertible")
        if is_invertible(self.u, tol) is not Verdict.INVERTIBLE:
            raise InvalidForm("u is not invertible")

    def jordan(self) -> Callable[[AlgebraElement], AlgebraElement]:
        inverses = [np.linalg.inv(p) for p in self.similarities]
        codomain = self.codomain

        def apply(x: AlgebraElement) -> AlgebraElement:
            out = [None] * len(self.perm)
            for i, blk in enumerate(x.blocks):
                if self.flags[i] is Flag.TRANSPOSE:
                    blk = blk.T
                out[self.perm[i]] = self.similarities[i] @ blk @ inverses[i]
            return AlgebraElement(codomain, out)

        return apply

    def normalized(self) -> "PreserverForm":
        """Similarities scaled to unit largest-magnitude entry; 1x1 flags set to I."""
        sims = tuple(normalize_similarity(p) for p in self.similarities)
        flags = tuple(
            Flag.IDENTITY if p.shape[0] == 1 else f for f, p in zip(self.flags, self.similarities)
        )
        return PreserverForm(self.u, self.perm, flags, sims)

    def to_dict(self) -> dict:
        from .serialize import SCHEMA_VERSION, element_to_json, matrix_to_json

        return {
            "schema": SCHEMA_VERSION,
            "u": element_to_json(self.u),
            "perm": list(self.perm),
            "flags": [f.value for f in self.flags],
            "p": [matrix_to_json(p) for p in self.similarities],
        }

    @classmethod
    def from_dict(cls, doc) -> "PreserverForm":
        from .errors import SchemaError
        from .serialize import _check_schema, element_from_json, matrix_from_json

        _check_schema(doc)
        for key in ("u", "perm", "flags", "p"):
            if key not in doc:
                raise SchemaError(f"form is missing {key!r}")
        u = element_from_json(doc["u"])
        perm, flags, ps = doc["perm"], doc["flags"], doc["p"]
        if not isinstance(perm, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in perm):
            raise SchemaError("perm must be a list of integers")
        if not isinstance(flags, list) or not all(f in ("I", "T") for f in flags):
            raise SchemaError('flags must be a list of "I" or "T"')
        if not isinstance(ps, list) or not all(isinstance(p, list) for p in ps):
            raise SchemaError("p must be a list of matrices")
        if not (len(perm) == len(flags) == len(ps)):
            raise SchemaError("perm, flags and p must have equal length")
        mats = [matrix_from_json(p, len(p), f"p[{i}]") for i, p in enumerate(ps)]
        return cls(u, tuple(perm), tuple(Flag(f) for f in flags), tuple(mats))


def normalize_similarity(p: np.ndarray) -> np.ndarray:
    flat = np.asarray(p).ravel()
    return np.asarray(p) / flat[np.argmax(np.abs(flat))]


def synthesize(form: PreserverForm, tol: Tolerances = DEFAULT_TOL, name: str = "form") -> BlackBoxMap:
    """The map ``x -> u J(x)`` described by ``form``."""
    form.validate(tol)
    jordan = form.jordan()
    u = form.u
    return BlackBoxMap(form.domain, form.codomain, lambda x: u @ jordan(x), name)


def jordan_part(form: PreserverForm, tol: Tolerances = DEFAULT_TOL) -> BlackBoxMap:
    """The unital map ``J`` of ``form`` (i.e. with ``u`` replaced by 1)."""
    form.validate(tol)
    return BlackBoxMap(form.domain, form.codomain, form.jordan(), "J")


def random_form(algebra: BlockAlgebra, seed=None, max_cond: float = 1e3, tol: Tolerances = DEFAULT_TOL) -> PreserverForm:
    """A random form on ``algebra`` with well-conditioned ``u`` and ``p_i``.

    Blocks of equal size are permuted uniformly; 1x1 blocks get flag I
    (transposition is invisible there).
    """
    rng = as_rng(seed)
    dims = algebra.block_dims
    perm = list(range(len(dims)))
    for n in sorted(set(dims)):
        idx = [i for i, m in enumerate(dims) if m == n]
        shuffled = [idx[j] for j in rng.permutation(len(idx))]
        for src, dst in zip(idx, shuffled):
            perm[src] = dst
    flags = tuple(
        Flag.IDENTITY if n == 1 else (Flag.TRANSPOSE if rng.integers(2) else Flag.IDENTITY) for n in dims
    )
    sims = tuple(random_invertible(BlockAlgebra([n]), rng, tol, max_cond).blocks[0] for n in dims)
    u = random_invertible(algebra, rng, tol, max_cond)
    return PreserverForm(u, tuple(perm), flags, sims)


# built-in maps ------------------------------------------------------------


def identity_map(algebra: BlockAlgebra) -> BlackBoxMap:
    return BlackBoxMap(algebra, algebra, lambda x: x, "identity")


def transpose_map(algebra: BlockAlgebra) -> BlackBoxMap:
    return BlackBoxMap(algebra, algebra, lambda x: x.transpose(), "transpose")


def left_multiply(u: AlgebraElement) -> BlackBoxMap:
    return BlackBoxMap(u.algebra, u.algebra, lambda x: u @ x, "left-multiply")


def additive_shift(phi: BlackBoxMap) -> BlackBoxMap:
    one = identity(phi.codomain)
    return BlackBoxMap(phi.domain, phi.codomain, lambda x: phi(x) + one, f"shift({phi.name})")


def quadratic_perturbation(phi: BlackBoxMap, eps: float = 0.1) -> BlackBoxMap:
    """``x -> phi(x + eps * x∘x)`` with ``∘`` the entrywise product."""

    def fn(x):
        return phi(AlgebraElement(x.algebra, [b + eps * b * b for b in x.blocks]))

    return BlackBoxMap(phi.domain, phi.codomain, fn, f"quadratic({phi.name})")


def rank_collapse(phi: BlackBoxMap) -> BlackBoxMap:
    """Zero the first row of every block before applying ``phi``."""

    def fn(x):
        blocks = []
        for b in x.blocks:
            b = np.array(b)
            b[0, :] = 0
            blocks.append(b)
        return phi(AlgebraElement(x.algebra, blocks))

    return BlackBoxMap(phi.domain, phi.codomain, fn, f"collapse({phi.name})")


# reports ------------------------------------------------------------------


@dataclass
class CheckReport:
    property: str
    trials: int
    ambiguous_skipped: int = 0
    counterexample: dict | None = None
    max_residual: float = 0.0
    probes: int = 0

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def to_dict(self) -> dict:
        from .serialize import element_to_json

        cex = None
        if self.counterexample is not None:
            cex = {}
            for key, value in sorted(self.counterexample.items()):
                if isinstance(value, AlgebraElement):
                    cex[key] = element_to_json(value)
                elif isinstance(value, Verdict):
                    cex[key] = value.value
                elif isinstance(value, complex):
                    cex[key] = [value.real + 0.0, value.imag + 0.0]
                else:
                    cex[key] = value
        return {
            "property": self.property,
            "trials": self.trials,
            "probes": self.probes,
            "ambiguous_skipped": self.ambiguous_skipped,
            "counterexample": cex,
            "max_residual": self.max_residual,
            "passed": self.passed,
        }


def _rel(diff: AlgebraElement, scale: float) -> float:
    return float(diff.norm() / scale)


# pencil condition -----------------------------------------------------------


def _pencil_eigenvalues(x: AlgebraElement, y: AlgebraElement) -> list[complex]:
    """Finite ``lam`` with ``lam x + y`` singular, from generalized eigenproblems."""
    out = []
    for xb, yb in zip(x.blocks, y.blocks):
        try:
            w = scipy.linalg.eigvals(-yb, xb, homogeneous_eigvals=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        alpha, beta = w
        big = np.abs(alpha) + np.abs(beta)
        ok = np.abs(beta) > 1e-12 * np.maximum(big, 1e-300)
        vals = alpha[ok] / beta[ok]
        out.extend(complex(v) for v in vals if abs(v) < 1e8)
    return out


def _sample_pool_element(rng, algebra: BlockAlgebra, tol: Tolerances) -> AlgebraElement:
    kind = int(rng.integers(4))
    if kind == 0:
        return random_element(algebra, rng)
    if kind == 1:
        return random_rank_one(algebra, rng, tol)
    if kind == 2:
        return random_invertible(algebra, rng, tol)
    return random_rank_stratified(algebra, rng)


def _pencil_verdict(lam: complex, x: AlgebraElement, y: AlgebraElement, tol: Tolerances):
    scale = abs(lam) * x.norm() + y.norm()
    ratios = block_singular_ratios(lam * x + y, scale)
    return combine_verdicts(classify_ratio(r, tol) for r in ratios), min(ratios)


def _structured_probes(algebra: BlockAlgebra, rng, max_pairs: int = 400):
    """Matrix-unit pairs in one block, the rest zero, identity, or identity plus unused diagonal."""
    lams = (1.0, -1.0, 0.0, 1j)
    for k, n in enumerate(algebra.block_dims):
        units = [(i, j) for i in range(n) for j in range(n)]
        # transposed unit pairs first: they separate x from x^T fastest
        swapped = [((i, j), (j, i)) for i, j in units]
        pairs = swapped + [pq for pq in itertools.product(units, units) if pq[1] != pq[0][::-1]]
        if len(pairs) > max_pairs:
            rest = pairs[len(swapped):]
            pick = rng.choice(len(rest), size=max(max_pairs - len(swapped), 0), replace=False)
            pairs = swapped + [rest[i] for i in sorted(pick)]
        outside = identity(algebra) - central_idempotent(algebra, k)
        for filler in ("zero", "identity", "diagonal"):
            base = zero(algebra) if filler == "zero" else outside
            for (i, j), (p, q) in pairs:
                x = base + matrix_unit(algebra, k, i, j)
                if filler == "diagonal":
                    # complete the unused rows of block k so the pencil can be invertible
                    for r in set(range(n)) - {i, j, p, q}:
                        x = x + matrix_unit(algebra, k, r, r)
                y = base + matrix_unit(algebra, k, p, q)
                for lam in lams:
                    yield x, y, lam


def pencil_condition_check(
    phi: BlackBoxMap,
    psi: BlackBoxMap,
    trials: int = 1000,
    seed=0,
    tol: Tolerances = DEFAULT_TOL,
    probes: bool = True,
) -> CheckReport:
    """Search for ``(x, y, lam)`` where ``lam x + y`` and ``lam phi(x) + psi(y)`` disagree.

    Deterministic matrix-unit probes run first, then ``trials`` random
    samples. ``lam`` is drawn from 0, +-1, a random complex number, a
    large-modulus number, and generalized eigenvalues of either pencil
    (these land exactly on the singular set, which random sampling almost
    never hits). Ambiguous verdicts on either side are skipped.

    ``max_residual`` is the largest gap between the two sides' worst
    ``sigma_min / sigma_max`` over the decided samples.
    """
    if phi.domain != psi.domain or phi.codomain != psi.codomain:
        raise ValueError("phi and psi must share domain and codomain")
    rng = as_rng(seed)
    algebra = phi.domain
    report = CheckReport("pencil_condition", 0)

    def evaluate(x, y, lam, origin):
        fx, gy = phi(x), psi(y)
        va, ra = _pencil_verdict(lam, x, y, tol)
        vb, rb = _pencil_verdict(lam, fx, gy, tol)
        if Verdict.AMBIGUOUS in (va, vb):
            report.ambiguous_skipped += 1
            return False
        report.max_residual = max(report.max_residual, abs(ra - rb))
        if va is not vb:
            report.counterexample = {
                "x": x, "y": y, "lam": complex(lam), "phi_x": fx, "psi_y": gy,
                "verdict_domain": va, "verdict_codomain": vb, "origin": origin,
            }
            return True
        return False

    if probes:
        for x, y, lam in _structured_probes(algebra, rng):
            report.probes += 1
            if evaluate(x, y, lam, "matrix-unit probe"):
                return report

    for _ in range(trials):
        report.trials += 1
        x = _sample_pool_element(rng, algebra, tol)
        y = _sample_pool_element(rng, algebra, tol)
        choice = int(rng.integers(7))
        if choice == 0:
            lam = 0.0
        elif choice == 1:
            lam = 1.0
        elif choice == 2:
            lam = -1.0
        elif choice == 3:
            lam = complex(_gaussian(rng, ()) * 2)
        elif choice == 4:
            lam = 1e3 * np.exp(2j * np.pi * rng.random())
        else:
            roots = _pencil_eigenvalues(x, y) if choice == 5 else _pencil_eigenvalues(phi(x), psi(y))
            lam = roots[int(rng.integers(len(roots)))] if roots else complex(_gaussian(rng, ()))
        if evaluate(x, y, lam, "random"):
            return report
    return report


def replay_counterexample(
    phi: BlackBoxMap, psi: BlackBoxMap, cex: dict, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """Recompute both verdicts of a stored counterexample; True if it still stands."""
    x, y, lam = cex["x"], cex["y"], cex["lam"]
    va, _ = _pencil_verdict(lam, x, y, tol)
    vb, _ = _pencil_verdict(lam, phi(x), psi(y), tol)
    return Verdict.AMBIGUOUS not in (va, vb) and va is not vb and (va, vb) == (
        cex["verdict_domain"], cex["verdict_codomain"]
    )


# lemma battery ----------------------------------------------------------------


def check_zero(phi: BlackBoxMap, psi: BlackBoxMap | None = None, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    report = CheckReport("zero", 0)
    for m in (phi,) if psi is None else (phi, psi):
        report.trials += 1
        value = m(zero(m.domain)).norm()
        report.max_residual = max(report.max_residual, value)
        if value > 1e-8:
            report.counterexample = {"map": m.name, "norm_at_zero": value}
            break
    return report


def check_unit_group(phi: BlackBoxMap, trials: int = 50, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    """Invertible inputs must map to invertible outputs and singular to singular."""
    rng = as_rng(seed)
    report = CheckReport("unit_group", 0)
    algebra = phi.domain
    for t in range(trials):
        report.trials += 1
        if t % 2 == 0:
            x = random_invertible(algebra, rng, tol)
        else:
            ranks = list(algebra.block_dims)
            k = int(rng.integers(len(ranks)))
            ranks[k] = int(rng.integers(ranks[k]))
            x = random_of_rank(algebra, ranks, rng)
        vx, vfx = is_invertible(x, tol), is_invertible(phi(x), tol)
        if Verdict.AMBIGUOUS in (vx, vfx):
            report.ambiguous_skipped += 1
            continue
        if vx is not vfx:
            report.counterexample = {"x": x, "phi_x": phi(x), "verdict_domain": vx, "verdict_codomain": vfx}
            break
    return report


def _lambda_pool(rng) -> complex:
    choice = int(rng.integers(4))
    if choice == 0:
        return 0j
    if choice == 1:
        return complex(_gaussian(rng, ()) * 2)
    if choice == 2:
        return complex(np.exp(2j * np.pi * rng.random()))
    return complex(1e3 * _gaussian(rng, ()))


def check_homogeneity(phi: BlackBoxMap, trials: int = 50, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    rng = as_rng(seed)
    report = CheckReport("homogeneity", 0)
    for _ in range(trials):
        report.trials += 1
        x = _sample_pool_element(rng, phi.domain, tol)
        lam = _lambda_pool(rng)
        fx = phi(x)
        res = _rel(phi(lam * x) - lam * fx, 1 + abs(lam) * fx.norm())
        report.max_residual = max(report.max_residual, res)
        if res > 1e-7:
            report.counterexample = {"x": x, "lam": lam, "residual": res}
            break
    return report


def check_injectivity_probe(phi: BlackBoxMap, trials: int = 50, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    rng = as_rng(seed)
    report = CheckReport("injectivity", 0)
    report.max_residual = float("inf")
    for t in range(trials):
        report.trials += 1
        x = _sample_pool_element(rng, phi.domain, tol)
        if t % 2:
            y = x + 1e-3 * random_rank_one(phi.domain, rng, tol)
        else:
            y = _sample_pool_element(rng, phi.domain, tol)
        if (x - y).norm() == 0:
            continue
        gap = (phi(x) - phi(y)).norm()
        report.max_residual = min(report.max_residual, gap)
        if gap <= 1e-9:
            report.counterexample = {"x": x, "y": y, "image_gap": gap}
            break
    # smallest observed image gap; inf when nothing was compared
    return report


def check_rank_preservation(phi: BlackBoxMap, trials: int = 20, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    """Spectral rank of ``phi(a)`` against that of ``a`` on rank-stratified samples."""
    rng = as_rng(seed)
    report = CheckReport("rank_preservation", 0)
    algebra = phi.domain
    for t in range(trials):
        report.trials += 1
        # cycle through full rank, rank one, and mixed ranks
        if t % 3 == 0:
            a = random_invertible(algebra, rng, tol)
        elif t % 3 == 1:
            a = random_rank_one(algebra, rng, tol)
        else:
            a = random_rank_stratified(algebra, rng)
        ra = spectral_rank(a, seed=rng, tol=tol).rank
        rb = spectral_rank(phi(a), seed=rng, tol=tol).rank
        report.max_residual = max(report.max_residual, abs(ra - rb))
        if ra != rb:
            report.counterexample = {"a": a, "rank_domain": ra, "rank_codomain": rb}
            break
    return report


def check_linearity_on_socle(phi: BlackBoxMap, trials: int = 50, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    """Additivity on sums of 2 to 4 rank-one elements."""
    rng = as_rng(seed)
    report = CheckReport("socle_linearity", 0)
    for _ in range(trials):
        report.trials += 1
        parts = [random_rank_one(phi.domain, rng, tol) for _ in range(int(rng.integers(2, 5)))]
        images = [phi(p) for p in parts]
        total = parts[0]
        image_total = images[0]
        for p, q in zip(parts[1:], images[1:]):
            total = total + p
            image_total = image_total + q
        res = _rel(phi(total) - image_total, 1 + sum(q.norm() for q in images))
        report.max_residual = max(report.max_residual, res)
        if res > 1e-7:
            report.counterexample = {"x": total, "parts": len(parts), "residual": res}
            break
    return report


def _spectrum_match(x: AlgebraElement, y: AlgebraElement, tol: Tolerances) -> float:
    a = np.array(spectrum(x, tol).multiset())
    b = np.array(spectrum(y, tol).multiset())
    if a.size != b.size:
        return float("inf")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if a.size else 0.0


def jordan_verify(J: BlackBoxMap, trials: int = 100, seed=0, tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    """``J(x^2) = J(x)^2`` and ``sigma(J(x)) = sigma(x)`` on random samples."""
    rng = as_rng(seed)
    report = CheckReport("jordan", 0)
    for _ in range(trials):
        report.trials += 1
        x = random_element(J.domain, rng)
        jx, jx2 = J(x), J(x @ x)
        res = _rel(jx2 - jx @ jx, 1 + max(jx.norm() ** 2, jx2.norm()))
        report.max_residual = max(report.max_residual, res)
        if res > 1e-7:
            report.counterexample = {"x": x, "kind": "square", "residual": res}
            break
        gap = _spectrum_match(x, jx, tol)
        if gap > tol.cluster_tol:
            report.counterexample = {"x": x, "kind": "spectrum", "spectral_gap": gap}
            break
    return report


def lemma_battery(
    phi: BlackBoxMap, psi: BlackBoxMap, trials: int = 50, seed=0, tol: Tolerances = DEFAULT_TOL
) -> list[CheckReport]:
    """Zero, unit group, homogeneity, injectivity, rank and socle additivity for both maps."""
    ss = np.random.SeedSequence(int(as_rng(seed).integers(2**63)) if isinstance(seed, np.random.Generator) else seed)
    reports = [check_zero(phi, psi, tol)]
    for m, child in zip((phi, psi), ss.spawn(2)):
        streams = child.spawn(5)
        for check, stream in zip(
            (check_unit_group, check_homogeneity, check_injectivity_probe, check_rank_preservation, check_linearity_on_socle),
            streams,
        ):
            n = max(1, trials // 3) if check is check_rank_preservation else trials
            r = check(m, n, np.random.default_rng(stream), tol)
            r.property = f"{r.property}[{m.name}]"
            reports.append(r)
    return reports


def refute(
    phi: BlackBoxMap, psi: BlackBoxMap, trials: int = 10_000, seed=0, tol: Tolerances = DEFAULT_TOL
) -> CheckReport | None:
    """First failing report from the pencil check or the lemma battery, else None."""
    for report in lemma_battery(phi, psi, min(trials, 50), seed, tol):
        if not report.passed:
            return report
    report = pencil_condition_check(phi, psi, trials, seed, tol)
    return None if report.passed else report


# reconstruction -------------------------------------------------------------

_SUPPORT_TOL = 1e-8
_MULT_TOL = 1e-6
_SIMILARITY_TOL = 1e-6
_PSI_TOL = 1e-7


def _embed(algebra: BlockAlgebra, k: int, block: np.ndarray) -> AlgebraElement:
    blocks = [np.zeros((n, n), dtype=complex) for n in algebra.block_dims]
    blocks[k] = block
    return AlgebraElement(algebra, blocks)


def _reconstruct_one(phi: BlackBoxMap, tol: Tolerances, rng) -> PreserverForm:
    domain, codomain = phi.domain, phi.codomain
    u = phi(identity(domain))
    if is_invertible(u, tol) is not Verdict.INVERTIBLE:
        raise ReconstructionError("phi(1) is not invertible")
    uinv = inverse(u, tol)

    def J(x):
        return uinv @ phi(x)

    one = identity(codomain)
    if (J(identity(domain)) - one).norm() > 1e-8:
        raise NotUnital("u^-1 phi(1) differs from the identity")

    # block permutation from central idempotents
    perm = []
    for i, n in enumerate(domain.block_dims):
        image = J(central_idempotent(domain, i))
        norms = [float(np.linalg.norm(b)) for b in image.blocks]
        top = max(norms)
        support = [k for k, v in enumerate(norms) if v > _SUPPORT_TOL * max(top, 1.0)]
        if len(support) != 1 or codomain.block_dims[support[0]] != n:
            raise PermutationAmbiguous(f"J(e_{i}) is supported on codomain blocks {support}")
        perm.append(support[0])
    if sorted(perm) != list(range(codomain.num_blocks)):
        raise PermutationAmbiguous(f"block images {perm} do not form a permutation")

    flags, sims = [], []
    for i, n in enumerate(domain.block_dims):
        target = perm[i]

        def J_block(z, i=i, target=target):
            return J(_embed(domain, i, z)).blocks[target]

        flag = Flag.IDENTITY
        if n > 1:
            mult = anti = 0.0
            for _ in range(3):
                x, y = _gaussian(rng, (n, n)), _gaussian(rng, (n, n))
                jx, jy, jxy = J_block(x), J_block(y), J_block(x @ y)
                scale = np.linalg.norm(jx) * np.linalg.norm(jy) + np.linalg.norm(jxy)
                mult = max(mult, np.linalg.norm(jxy - jx @ jy) / scale)
                anti = max(anti, np.linalg.norm(jxy - jy @ jx) / scale)
            if min(mult, anti) > _MULT_TOL:
                raise NeitherMultiplicativeNorAnti(
                    f"block {i}: multiplicative residual {mult:.3g}, anti {anti:.3g}"
                )
            flag = Flag.IDENTITY if mult <= anti else Flag.TRANSPOSE

        def M(z, flag=flag, J_block=J_block):
            return J_block(z.T if flag is Flag.TRANSPOSE else z)

        def unit(a, b, n=n):
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = 1.0
            return e

        # M(E_jj) = (p e_j)(row j of p^-1): any column of it is c * p e_j
        images = [M(unit(j, j)) for j in range(n)]
        col_norms = [np.linalg.norm(img, axis=0) for img in images]
        biggest = max(float(c.max()) for c in col_norms)
        j = next(j for j in range(n) if col_norms[j].max() > _SUPPORT_TOL * biggest)
        v = images[j][:, int(np.argmax(col_norms[j]))]
        p = np.column_stack([M(unit(k, j)) @ v for k in range(n)])
        p = normalize_similarity(p)
        try:
            pinv = np.linalg.inv(p)
        except np.linalg.LinAlgError:
            raise SimilarityInconsistent(f"block {i}: recovered similarity is singular") from None
        for _ in range(3):
            z = _gaussian(rng, (n, n))
            mz = M(z)
            res = np.linalg.norm(mz - p @ z @ pinv) / max(np.linalg.norm(mz), 1e-300)
            if res > _SIMILARITY_TOL:
                raise SimilarityInconsistent(f"block {i}: M(x) != p x p^-1 (residual {res:.3g})")
        flags.append(flag)
        sims.append(p)
    return PreserverForm(u, tuple(perm), tuple(flags), tuple(sims))


def reconstruct(
    phi: BlackBoxMap,
    psi: BlackBoxMap,
    tol: Tolerances = DEFAULT_TOL,
    seed=0,
    samples: int = 20,
    independent: bool = False,
) -> PreserverForm:
    """Recover ``u``, the block permutation, flags and similarities of ``phi = psi``.

    ``u = phi(1)`` and ``J = u^-1 phi``. Central idempotents locate the
    block permutation; multiplicativity versus anti-multiplicativity on
    random single-block samples decides the transpose flags; the similarity
    is read off from images of matrix units and normalised to unit
    largest-magnitude entry. ``psi`` is then checked to agree with ``phi``.

    With ``independent=True`` the form of ``psi`` is recovered separately
    and compared with that of ``phi`` instead.
    """
    rng = as_rng(seed)
    form = _reconstruct_one(phi, tol, rng)
    if independent:
        other = _reconstruct_one(psi, tol, rng)
        same = (
            other.perm == form.perm
            and other.flags == form.flags
            and (other.u - form.u).norm() <= _PSI_TOL * (1 + form.u.norm())
            and all(np.linalg.norm(p - q) <= _PSI_TOL * np.linalg.norm(p) for p, q in zip(form.similarities, other.similarities))
        )
        if not same:
            raise PsiMismatch("psi has a different canonical form than phi")
        return form
    for _ in range(samples):
        x = random_element(phi.domain, rng)
        fx = phi(x)
        res = _rel(psi(x) - fx, 1 + fx.norm())
        if res > _PSI_TOL:
            raise PsiMismatch(f"psi(x) differs from phi(x) (relative residual {res:.3g})")
    return form


def roundtrip_residual(form: PreserverForm, phi: BlackBoxMap, samples: int = 100, seed=0) -> float:
    """Largest ``|phi_form(x) - phi(x)| / (1 + |phi(x)|)`` over random probes."""
    rng = as_rng(seed)
    rebuilt = synthesize(form)
    worst = 0.0
    for _ in range(samples):
        x = random_element(phi.domain, rng)
        fx = phi(x)
        worst = max(worst, _rel(rebuilt(x) - fx, 1 + fx.norm()))
    return worst


def similarity_residual(recovered: np.ndarray, truth: np.ndarray) -> float:
    """``min_c |recovered - c truth| / |recovered|`` (Frobenius)."""
    truth = np.asarray(truth)
    c = np.vdot(truth, recovered) / np.vdot(truth, truth)
    return float(np.linalg.norm(recovered - c * truth) / np.linalg.norm(recovered))
