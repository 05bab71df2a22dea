"""Spectral rank, the set E(a), maximal finite-rank elements and the trace.

The spectral rank is computed from the invertibility of pencils: for a
generic invertible ``y`` the number of distinct ``t`` making ``y + t a``
singular equals the rank of ``a``. Each quantity has a classical oracle
(row reduction, diagonal sum) that never shares code with the main route.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    Tolerances,
    _gaussian,
    as_rng,
    matrix_unit,
    random_invertible,
    random_rank_one,
    spectrum,
    zero,
)
from .errors import DegenerateTrial, IllConditioned, NotMaximalFiniteRank

DEFAULT_RANK_TRIALS = 8
# trailing determinant-polynomial coefficients below this fraction of the
# largest one are noise
COEFF_TRUNCATION = 1e-10
MAX_DEGENERATE_RESAMPLES = 20
EIGVEC_COND_LIMIT = 1e8


# classical oracle -------------------------------------------------------


def _gaussian_elimination_rank(block: np.ndarray, threshold: float) -> int:
    m = np.array(block, dtype=np.complex128)
    n_rows, n_cols = m.shape
    rank = 0
    for k in range(min(n_rows, n_cols)):
        sub = np.abs(m[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= threshold:
            break
        i += k
        j += k
        m[[k, i], :] = m[[i, k], :]
        m[:, [k, j]] = m[:, [j, k]]
        m[k + 1 :, k:] -= np.outer(m[k + 1 :, k] / m[k, k], m[k, k:])
        rank += 1
    return rank


def classical_rank_oracle(a: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> int:
    """Sum of per-block ranks by complete-pivoting row reduction.

    A pivot counts when it exceeds ``singular_tol`` times the block's
    largest singular value.
    """
    total = 0
    for block in a.blocks:
        smax = float(np.linalg.norm(block, 2))
        if smax == 0:
            continue
        total += _gaussian_elimination_rank(block, tol.singular_tol * smax)
    return total


# spectral rank ----------------------------------------------------------


@dataclass
class RankReport:
    rank: int
    trials_used: int
    per_trial_counts: list[int]
    oracle_rank: int
    degenerate_resamples: int = 0

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "trials_used": self.trials_used,
            "per_trial_counts": list(self.per_trial_counts),
            "oracle_rank": self.oracle_rank,
            "degenerate_resamples": self.degenerate_resamples,
        }


def chebyshev_nodes(count: int) -> np.ndarray:
    k = np.arange(count)
    return np.cos((2 * k + 1) * np.pi / (2 * count))


@functools.lru_cache(maxsize=None)
def _interpolation_data(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes = chebyshev_nodes(n + 1)
    vander_inv = np.linalg.inv(np.vander(nodes, n + 1, increasing=True))
    nodes.setflags(write=False)
    vander_inv.setflags(write=False)
    return nodes, vander_inv


def determinant_polynomial(y_block: np.ndarray, a_block: np.ndarray) -> np.ndarray:
    """Coefficients (ascending powers of t) of ``det(y + t a)`` for one block.

    Recovered by interpolating determinant values at ``n + 1`` Chebyshev
    nodes on [-1, 1].
    """
    nodes, vander_inv = _interpolation_data(y_block.shape[0])
    return kernels.det_poly_coeffs(y_block, a_block, nodes, vander_inv)


def count_distinct(values, tol: float) -> int:
    """Number of clusters when points closer than ``tol`` are chained together."""
    values = list(values)
    if not values:
        return 0
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(len(values))})


def pencil_roots(y_block: np.ndarray, a_block: np.ndarray) -> tuple[np.ndarray, bool]:
    """Roots of ``det(y + t a)`` for one block and a flag for an all-zero polynomial.

    Top coefficients below ``COEFF_TRUNCATION`` times the largest one are
    dropped before root finding.
    """
    nodes, vander_inv = _interpolation_data(y_block.shape[0])
    return kernels.pencil_roots(y_block, a_block, nodes, vander_inv, COEFF_TRUNCATION)


def pencil_root_count(y: AlgebraElement, a_hat: AlgebraElement, tol: Tolerances) -> int:
    """Distinct roots of ``t -> det(y + t a_hat)``, block factors pooled."""
    roots = []
    all_zero = True
    for y_block, a_block in zip(y.blocks, a_hat.blocks):
        block_roots, degenerate = pencil_roots(y_block, a_block)
        all_zero = all_zero and degenerate
        roots.extend(block_roots.tolist())
    if all_zero:
        raise DegenerateTrial("determinant polynomial vanished identically")
    return count_distinct(roots, tol.cluster_tol)


def spectral_rank(
    a: AlgebraElement,
    trials: int = DEFAULT_RANK_TRIALS,
    seed=0,
    tol: Tolerances = DEFAULT_TOL,
) -> RankReport:
    """Spectral rank as the largest number of singular points on a pencil.

    For each trial an invertible ``y`` is drawn and the distinct roots of
    ``det(y + t a)`` are counted; the rank is the maximum count.

    Parameters
    ----------
    a : AlgebraElement
    trials : int
        Number of random invertible ``y``. The supremum is attained on a
        dense open set, so a handful suffices.
    seed : int or numpy.random.Generator
    tol : Tolerances

    Returns
    -------
    RankReport
        Includes the row-reduction rank as ``oracle_rank``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(seed)
    oracle = classical_rank_oracle(a, tol)
    norm = a.norm()
    if norm == 0:
        return RankReport(0, trials, [0] * trials, oracle)
    a_hat = a / norm
    counts = []
    resamples = 0
    while len(counts) < trials:
        y = random_invertible(a.algebra, rng, tol)
        y = y / y.norm()
        try:
            counts.append(pencil_root_count(y, a_hat, tol))
        except DegenerateTrial:
            resamples += 1
            if resamples > MAX_DEGENERATE_RESAMPLES:
                raise
    return RankReport(max(counts), trials, counts, oracle, resamples)


def rank(a: AlgebraElement, trials: int = DEFAULT_RANK_TRIALS, seed=0, tol=DEFAULT_TOL) -> int:
    return spectral_rank(a, trials, seed, tol).rank


# E(a) and maximal finite rank ------------------------------------------


def e_set_member(
    x: AlgebraElement,
    a: AlgebraElement,
    tol: Tolerances = DEFAULT_TOL,
    seed=0,
    rank_of_a: int | None = None,
) -> bool:
    """Whether ``#sigma'(x a)`` attains the spectral rank of ``a``."""
    if rank_of_a is None:
        rank_of_a = spectral_rank(a, seed=seed, tol=tol).rank
    return len(spectrum(x @ a, tol).nonzero()) == rank_of_a


def is_maximal_finite_rank(a: AlgebraElement, tol: Tolerances = DEFAULT_TOL, seed=0) -> bool:
    return len(spectrum(a, tol).nonzero()) == spectral_rank(a, seed=seed, tol=tol).rank


@dataclass
class IdempotentDecomposition:
    terms: list[tuple[complex, AlgebraElement]] = field(default_factory=list)

    def reconstruct(self, algebra: BlockAlgebra) -> AlgebraElement:
        total = zero(algebra)
        for lam, p in self.terms:
            total = total + lam * p
        return total

    def residuals(self, a: AlgebraElement) -> dict[str, float]:
        """Idempotency, orthogonality and reconstruction residuals (2-norms)."""
        idem = max((float((p @ p - p).norm()) for _, p in self.terms), default=0.0)
        ortho = 0.0
        for i, (_, p) in enumerate(self.terms):
            for j, (_, q) in enumerate(self.terms):
                if i != j:
                    ortho = max(ortho, float((p @ q).norm()))
        recon = float((self.reconstruct(a.algebra) - a).norm())
        return {"idempotency": idem, "orthogonality": ortho, "reconstruction": recon}


def idempotent_decomposition(
    a: AlgebraElement, tol: Tolerances = DEFAULT_TOL, seed=0
) -> IdempotentDecomposition:
    """Write a maximal finite-rank element as ``sum lambda_i p_i``.

    Each ``p_i`` is the spectral projection of the simple eigenvalue
    ``lambda_i``, built from its right and left eigenvectors.
    """
    if not is_maximal_finite_rank(a, tol, seed):
        raise NotMaximalFiniteRank("element is not a maximal finite-rank element")
    algebra = a.algebra
    terms = []
    for k, block in enumerate(a.blocks):
        w, vl, vr = scipy.linalg.eig(block, left=True, right=True)
        for idx in np.argsort(-np.abs(w), kind="stable"):
            lam = w[idx]
            if abs(lam) <= tol.cluster_tol:
                continue
            right = vr[:, idx]
            left = vl[:, idx]
            denom = np.vdot(left, right)
            if abs(denom) < 1.0 / EIGVEC_COND_LIMIT:
                raise IllConditioned(
                    f"eigenvalue {lam:.6g} in block {k} has condition number "
                    f"{1.0 / max(abs(denom), 1e-300):.3g}"
                )
            proj = np.outer(right, left.conj()) / denom
            blocks = [np.zeros((n, n), dtype=complex) for n in algebra.block_dims]
            blocks[k] = proj
            terms.append((complex(lam), AlgebraElement(algebra, blocks)))
    return IdempotentDecomposition(terms)


def random_maximal_finite_rank(algebra: BlockAlgebra, rank: int, seed=None) -> AlgebraElement:
    """``sum lambda_i p_i`` over ``rank`` random orthogonal rank-one idempotents.

    Coefficients are distinct, nonzero and separated by at least 0.1; the
    similarities are kept to condition number at most 1e3.
    """
    rng = as_rng(seed)
    if not 0 <= rank <= algebra.size:
        raise ValueError(f"rank {rank} impossible in {algebra!r}")
    slots = [k for k, n in enumerate(algebra.block_dims) for _ in range(n)]
    chosen = rng.choice(len(slots), size=rank, replace=False)
    per_block = [0] * algebra.num_blocks
    for c in chosen:
        per_block[slots[c]] += 1
    lams: list[complex] = []
    while len(lams) < rank:
        lam = complex(_gaussian(rng, ()) * 2)
        if abs(lam) > 0.1 and all(abs(lam - mu) > 0.1 for mu in lams):
            lams.append(lam)
    blocks = []
    it = iter(lams)
    for n, count in zip(algebra.block_dims, per_block):
        diag = np.zeros(n, dtype=complex)
        diag[:count] = [next(it) for _ in range(count)]
        s = random_invertible(BlockAlgebra([n]), rng, max_cond=1e3).blocks[0]
        blocks.append(s @ np.diag(diag) @ np.linalg.inv(s))
    return AlgebraElement(algebra, blocks)


# trace --------------------------------------------------------------------


def trace(a: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> complex:
    """``sum lambda * m(lambda, a)`` with algebraic multiplicities."""
    return complex(sum(lam * m for lam, m in spectrum(a, tol).entries))


def diagonal_trace(a: AlgebraElement) -> complex:
    """Classical oracle: sum of diagonal entries over all blocks."""
    return complex(sum(np.trace(b) for b in a.blocks))


@dataclass
class AnnihilationResult:
    zero_confirmed: bool
    witness: AlgebraElement | None = None
    value: complex = 0j
    source: str = ""


def trace_annihilation_test(
    x: AlgebraElement, samples: int = 100, seed=0, tol: Tolerances = DEFAULT_TOL
) -> AnnihilationResult:
    """Find a rank-one ``a`` with ``tr(x a)`` clearly nonzero, or confirm ``x = 0``.

    Random rank-one samples are tried first; the matrix-unit sweep after
    them reads off the entries of ``x`` and cannot miss a nonzero ``x``.
    """
    norm = x.norm()
    if norm <= 1e-10:
        return AnnihilationResult(True, source="norm")
    threshold = 1e-6 * norm
    rng = as_rng(seed)
    for _ in range(samples):
        a = random_rank_one(x.algebra, rng, tol)
        a = a / a.norm()
        value = trace(x @ a, tol)
        if abs(value) > threshold:
            return AnnihilationResult(False, a, value, "random")
    best = None
    for k, n in enumerate(x.algebra.block_dims):
        for i in range(n):
            for j in range(n):
                a = matrix_unit(x.algebra, k, i, j)
                value = trace(x @ a, tol)
                if best is None or abs(value) > abs(best[1]):
                    best = (a, value)
    if best is not None and abs(best[1]) > threshold:
        return AnnihilationResult(False, best[0], best[1], "matrix-unit")
    # unreachable for norm > 1e-10: the largest entry is at least norm / size
    return AnnihilationResult(True, source="sweep")
