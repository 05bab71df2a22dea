"""Block matrix algebras ``M_{n1}(C) + ... + M_{nk}(C)`` and their elements.

Arithmetic is blockwise. Invertibility is reported three-valued because
floating point cannot certify that a matrix is exactly singular; callers
that sample at random discard :attr:`Verdict.AMBIGUOUS` outcomes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    AlgebraMismatch,
    ConvergenceFailure,
    GenerationFailure,
    NotInvertible,
)

MAX_TOTAL_SIZE = 64
_EPS = np.finfo(float).eps
# merge a near-coincident eigenvalue group when its centred elementary
# symmetric functions are at backward-error level (defective clusters)
_DEFECT_FACTOR = 100.0


@dataclass(frozen=True)
class Tolerances:
    singular_tol: float = 1e-12
    ambiguity_band: float = 1e-8
    cluster_tol: float = 1e-7

    def __post_init__(self):
        for name in ("singular_tol", "ambiguity_band", "cluster_tol"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite nonnegative number, got {value!r}")
        if self.ambiguity_band < self.singular_tol:
            raise ValueError("ambiguity_band must be >= singular_tol")


DEFAULT_TOL = Tolerances()


class Verdict(enum.Enum):
    INVERTIBLE = "Invertible"
    SINGULAR = "Singular"
    AMBIGUOUS = "Ambiguous"


@dataclass(frozen=True)
class BlockAlgebra:
    """The algebra of block diagonal matrices with the given block sizes."""

    block_dims: tuple[int, ...]

    def __init__(self, block_dims: Iterable[int], max_total_size: int = MAX_TOTAL_SIZE):
        dims = tuple(int(n) for n in block_dims)
        if not dims:
            raise ValueError("a block algebra needs at least one block")
        if any(n < 1 for n in dims):
            raise ValueError(f"block dimensions must be positive, got {dims}")
        if sum(dims) > max_total_size:
            raise ValueError(f"total size {sum(dims)} exceeds cap {max_total_size}")
        object.__setattr__(self, "block_dims", dims)

    @classmethod
    def parse(cls, text: str) -> "BlockAlgebra":
        """Build from a comma separated dimension list such as ``"2,3,2"``."""
        try:
            return cls(int(part) for part in text.split(",") if part.strip())
        except ValueError as exc:
            raise ValueError(f"bad algebra description {text!r}: {exc}") from None

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def size(self) -> int:
        """Sum of block sizes (the matrix size of the block diagonal embedding)."""
        return sum(self.block_dims)

    @property
    def dimension(self) -> int:
        """Complex vector space dimension."""
        return sum(n * n for n in self.block_dims)

    def __repr__(self):
        return f"BlockAlgebra({list(self.block_dims)})"

    def __str__(self):
        return " + ".join(f"M{n}" for n in self.block_dims)


def _freeze(block) -> np.ndarray:
    arr = np.array(block, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


class AlgebraElement:
    """An element of a :class:`BlockAlgebra`, stored as one dense matrix per block.

    Instances are immutable; the block arrays are read-only.
    """

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: BlockAlgebra, blocks: Sequence):
        if len(blocks) != algebra.num_blocks:
            raise ValueError(
                f"expected {algebra.num_blocks} blocks for {algebra!r}, got {len(blocks)}"
            )
        frozen = []
        for i, (block, n) in enumerate(zip(blocks, algebra.block_dims)):
            arr = _freeze(block)
            if arr.shape != (n, n):
                raise ValueError(f"block {i} has shape {arr.shape}, expected {(n, n)}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"block {i} contains non-finite entries")
            frozen.append(arr)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "blocks", tuple(frozen))

    @classmethod
    def single(cls, block) -> "AlgebraElement":
        """Element of ``M_n`` holding one square matrix."""
        block = np.asarray(block)
        return cls(BlockAlgebra([block.shape[0]]), [block])

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraElement is immutable")

    def __reduce__(self):
        return (AlgebraElement, (self.algebra, [np.array(b) for b in self.blocks]))

    def __repr__(self):
        return f"AlgebraElement({self.algebra!r}, {[b.tolist() for b in self.blocks]})"

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.algebra.block_dims != self.algebra.block_dims:
            raise AlgebraMismatch(
                f"{self.algebra!r} and {other.algebra!r} have different block structure"
            )
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgebraElement(self.algebra, [-b for b in self.blocks])

    def __mul__(self, scalar):
        if isinstance(scalar, AlgebraElement) or not np.isscalar(scalar):
            return NotImplemented
        return AlgebraElement(self.algebra, [scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, AlgebraElement) or not np.isscalar(scalar):
            return NotImplemented
        return AlgebraElement(self.algebra, [b / scalar for b in self.blocks])

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.algebra == other.algebra and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)
        )

    __hash__ = None

    # helpers ------------------------------------------------------------
    def norm(self) -> float:
        """Operator 2-norm of the block diagonal matrix (max over blocks)."""
        return max(float(np.linalg.norm(b, 2)) for b in self.blocks)

    def fro(self) -> float:
        return float(math.sqrt(sum(np.sum(np.abs(b) ** 2) for b in self.blocks)))

    def transpose(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, [b.T for b in self.blocks])

    def to_dense(self) -> np.ndarray:
        """The block diagonal matrix of size ``algebra.size``."""
        out = np.zeros((self.algebra.size, self.algebra.size), dtype=np.complex128)
        offset = 0
        for b in self.blocks:
            n = b.shape[0]
            out[offset : offset + n, offset : offset + n] = b
            offset += n
        return out

    def with_block(self, index: int, block) -> "AlgebraElement":
        blocks = list(self.blocks)
        blocks[index] = block
        return AlgebraElement(self.algebra, blocks)


def add(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    return x + y


def scale(x: AlgebraElement, lam: complex) -> AlgebraElement:
    return lam * x


def multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    return x @ y


def identity(algebra: BlockAlgebra) -> AlgebraElement:
    return AlgebraElement(algebra, [np.eye(n) for n in algebra.block_dims])


def zero(algebra: BlockAlgebra) -> AlgebraElement:
    return AlgebraElement(algebra, [np.zeros((n, n)) for n in algebra.block_dims])


def matrix_unit(algebra: BlockAlgebra, block: int, i: int, j: int) -> AlgebraElement:
    """``E_ij`` placed in ``block``, zero elsewhere (indices 0-based)."""
    blocks = [np.zeros((n, n)) for n in algebra.block_dims]
    blocks[block][i, j] = 1.0
    return AlgebraElement(algebra, blocks)


def central_idempotent(algebra: BlockAlgebra, block: int) -> AlgebraElement:
    blocks = [np.zeros((n, n)) for n in algebra.block_dims]
    blocks[block] = np.eye(algebra.block_dims[block])
    return AlgebraElement(algebra, blocks)


def from_dense(algebra: BlockAlgebra, matrix) -> AlgebraElement:
    """Cut the diagonal blocks out of a ``size x size`` matrix."""
    matrix = np.asarray(matrix)
    blocks, offset = [], 0
    for n in algebra.block_dims:
        blocks.append(matrix[offset : offset + n, offset : offset + n])
        offset += n
    return AlgebraElement(algebra, blocks)


# invertibility ----------------------------------------------------------


def block_singular_ratios(x: AlgebraElement, scale: float = 0.0) -> list[float]:
    """sigma_min / max(sigma_max, scale) per block; 0.0 for a zero block.

    ``scale`` is the magnitude of the operands ``x`` was computed from (e.g.
    ``|a| + |b|`` for ``x = a + b``). Without it a 1x1 block, or any block
    that is pure cancellation residue, would look perfectly conditioned.
    """
    ratios = []
    for b in x.blocks:
        s = np.linalg.svd(b, compute_uv=False)
        ref = max(float(s[0]), scale)
        ratios.append(0.0 if ref == 0 else float(s[-1] / ref))
    return ratios


def classify_ratio(ratio: float, tol: Tolerances) -> Verdict:
    if ratio < tol.singular_tol:
        return Verdict.SINGULAR
    if ratio > tol.ambiguity_band:
        return Verdict.INVERTIBLE
    return Verdict.AMBIGUOUS


def combine_verdicts(verdicts: Iterable[Verdict]) -> Verdict:
    verdicts = list(verdicts)
    if Verdict.SINGULAR in verdicts:
        return Verdict.SINGULAR
    if Verdict.AMBIGUOUS in verdicts:
        return Verdict.AMBIGUOUS
    return Verdict.INVERTIBLE


def is_invertible(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> Verdict:
    """Singular-value based invertibility verdict.

    A block is singular when ``sigma_min < singular_tol * ref``, invertible
    when ``sigma_min > ambiguity_band * ref`` and ambiguous in between, with
    ``ref = max(sigma_max, scale)``. The element is singular iff some block is.
    """
    return combine_verdicts(classify_ratio(r, tol) for r in block_singular_ratios(x, scale))


def hadamard_ratios(x: AlgebraElement, scale: float = 0.0) -> list[float]:
    """Column-based singularity measure per block, from the determinant.

    ``|det| / prod(c_j)`` with column norms ``c_j`` floored at ``scale``,
    times ``min c_j / max(max c_j, scale)``. The first factor catches
    dependent columns, the second columns of very different size (which the
    first ignores). Since ``sigma_min <= min c_j`` and ``sigma_max >= max c_j``,
    the second factor bounds ``sigma_min / sigma_max`` from above. Uses the LU
    determinant kernel and never an SVD, so it is an independent route.
    """
    ratios = []
    for b in x.blocks:
        raw = np.linalg.norm(b, axis=0)
        cols = np.maximum(raw, scale)
        if np.any(cols == 0):
            ratios.append(0.0)
            continue
        det = kernels.batch_det(b[None, :, :])[0]
        spread = float(raw.min() / max(raw.max(), scale))
        ratios.append(float(abs(det) / np.prod(cols)) * spread)
    return ratios


def determinant_verdict(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> Verdict:
    return combine_verdicts(classify_ratio(r, tol) for r in hadamard_ratios(x, scale))


def determinant(x: AlgebraElement) -> complex:
    """Determinant of the block diagonal matrix (product of block determinants)."""
    return complex(np.prod([kernels.batch_det(b[None, :, :])[0] for b in x.blocks]))


def inverse(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> AlgebraElement:
    verdict = is_invertible(x, tol)
    if verdict is not Verdict.INVERTIBLE:
        raise NotInvertible(f"element is {verdict.value}, cannot invert")
    return AlgebraElement(x.algebra, [np.linalg.inv(b) for b in x.blocks])


# spectra ----------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with algebraic multiplicities, merged at ``cluster_tol``."""

    entries: tuple[tuple[complex, int], ...]
    cluster_tol: float

    @property
    def values(self) -> list[complex]:
        return [lam for lam, _ in self.entries]

    def multiset(self) -> list[complex]:
        return [lam for lam, m in self.entries for _ in range(m)]

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.entries)

    def radius(self) -> float:
        return max((abs(lam) for lam, _ in self.entries), default=0.0)

    def nonzero(self) -> list[complex]:
        return [lam for lam, _ in self.entries if abs(lam) > self.cluster_tol]

    def multiplicity(self, lam: complex) -> int:
        return sum(m for mu, m in self.entries if abs(mu - lam) <= self.cluster_tol)


def _elementary_symmetric(values: np.ndarray) -> np.ndarray:
    """e_0..e_m of ``values`` (up to sign, from the monic polynomial)."""
    return np.abs(np.poly(values))


def _defective_groups(values: np.ndarray, scale: float) -> list[list[complex]]:
    """Partition one block's eigenvalues into numerically multiple eigenvalues.

    Candidate groups are balls around each eigenvalue (the seed plus its
    nearest neighbours); the largest candidate that passes
    :func:`_is_defective_cluster` is taken first and removed.
    """
    n_total = len(values)
    remaining = [complex(v) for v in values]
    groups = []
    while remaining:
        best = None
        arr = np.array(remaining)
        orders = [np.argsort(np.abs(arr - v), kind="stable") for v in arr]
        for size in range(len(remaining), 1, -1):
            for seed in range(len(remaining)):
                order = orders[seed][:size]
                if _is_defective_cluster(arr[order], scale, n_total):
                    spread = float(np.max(np.abs(arr[order] - arr[order].mean())))
                    if best is None or spread < best[0]:
                        best = (spread, sorted(order.tolist()))
            if best is not None:
                break
        if best is None:
            groups.extend([v] for v in remaining)
            break
        chosen = best[1]
        groups.append([remaining[i] for i in chosen])
        remaining = [v for i, v in enumerate(remaining) if i not in chosen]
    return groups


def _is_defective_cluster(values: np.ndarray, scale: float, n: int) -> bool:
    if scale == 0:
        return True
    centred = values - values.mean()
    bound = _DEFECT_FACTOR * n * _EPS
    # Fujiwara: roots of a polynomial with |e_k| <= bound*scale^k lie within
    # 2 * bound**(1/m) * scale of the centre
    if np.max(np.abs(centred)) > 2.0 * bound ** (1.0 / len(values)) * scale:
        return False
    coeffs = _elementary_symmetric(centred)
    return all(coeffs[k] <= bound * scale**k for k in range(2, len(values) + 1))


def _block_eigenvalues(block: np.ndarray, index: int) -> np.ndarray:
    try:
        values = np.linalg.eigvals(block)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigenvalue iteration failed on block {index}: {exc}", block=index)
    if not np.all(np.isfinite(values)):
        raise ConvergenceFailure(f"non-finite eigenvalues in block {index}", block=index)
    return values


def spectrum(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> Spectrum:
    """Multiset union of the block spectra.

    Within a block, eigenvalues are grouped when closer than ``cluster_tol``
    or when a group is numerically one defective eigenvalue (e.g. the
    spread-out roots of a perturbed Jordan block); each group is represented
    by its mean, which keeps the eigenvalue sum exact. Groups from different
    blocks are then merged at ``cluster_tol``.
    """
    groups: list[list[complex]] = []
    for index, block in enumerate(x.blocks):
        values = _block_eigenvalues(block, index)
        scale = float(np.linalg.norm(block, 2))
        groups.extend(_defective_groups(values, scale))
    # across blocks: plain distance merge on the group means
    merged = _merge_close(groups, tol.cluster_tol)
    entries = sorted(
        ((complex(np.mean(g)), len(g)) for g in merged),
        key=lambda e: (round(e[0].real, 12), round(e[0].imag, 12)),
    )
    return Spectrum(tuple(entries), tol.cluster_tol)


def _merge_close(groups: list[list[complex]], tol: float) -> list[list[complex]]:
    changed = True
    while changed and len(groups) > 1:
        changed = False
        means = [np.mean(g) for g in groups]
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if abs(means[i] - means[j]) <= tol:
                    merged = groups[i] + groups[j]
                    groups = [g for k, g in enumerate(groups) if k not in (i, j)] + [merged]
                    changed = True
                    break
            if changed:
                break
    return groups


def spectral_radius(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> float:
    return spectrum(x, tol).radius()


def nonzero_spectrum(x: AlgebraElement, tol: Tolerances = DEFAULT_TOL) -> list[complex]:
    return spectrum(x, tol).nonzero()


# random generators ------------------------------------------------------

MAX_ATTEMPTS = 100


def as_rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_element(algebra: BlockAlgebra, seed=None) -> AlgebraElement:
    rng = as_rng(seed)
    return AlgebraElement(algebra, [_gaussian(rng, (n, n)) for n in algebra.block_dims])


def random_invertible(
    algebra: BlockAlgebra, seed=None, tol: Tolerances = DEFAULT_TOL, max_cond: float | None = None
) -> AlgebraElement:
    """Gaussian element resampled until :func:`is_invertible` says Invertible.

    ``max_cond`` optionally bounds the per-block condition number as well.
    """
    rng = as_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        x = random_element(algebra, rng)
        if is_invertible(x, tol) is not Verdict.INVERTIBLE:
            continue
        if max_cond is not None and min(block_singular_ratios(x)) < 1.0 / max_cond:
            continue
        return x
    raise GenerationFailure(f"no invertible sample in {MAX_ATTEMPTS} attempts")


def random_rank_one(algebra: BlockAlgebra, seed=None, tol: Tolerances = DEFAULT_TOL) -> AlgebraElement:
    """Outer product ``e f^T`` of Gaussian vectors in one random block."""
    rng = as_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        k = int(rng.integers(algebra.num_blocks))
        n = algebra.block_dims[k]
        e, f = _gaussian(rng, n), _gaussian(rng, n)
        if np.linalg.norm(e) * np.linalg.norm(f) < 1e-6:
            continue
        blocks = [np.zeros((m, m), dtype=complex) for m in algebra.block_dims]
        blocks[k] = np.outer(e, f)
        return AlgebraElement(algebra, blocks)
    raise GenerationFailure("could not draw a rank-one element")


def random_quasinilpotent(
    algebra: BlockAlgebra, seed=None, tol: Tolerances = DEFAULT_TOL
) -> AlgebraElement:
    """Blockwise ``s N s^-1`` with ``N`` strictly upper triangular Gaussian."""
    rng = as_rng(seed)
    blocks = []
    for n in algebra.block_dims:
        sub = BlockAlgebra([n])
        s = random_invertible(sub, rng, tol, max_cond=1e4).blocks[0]
        nil = np.triu(_gaussian(rng, (n, n)), 1)
        blocks.append(s @ nil @ np.linalg.inv(s))
    return AlgebraElement(algebra, blocks)


def random_of_rank(algebra: BlockAlgebra, ranks: Sequence[int], seed=None) -> AlgebraElement:
    """Element whose block ``i`` is a Gaussian product of rank ``ranks[i]``."""
    rng = as_rng(seed)
    blocks = []
    for n, r in zip(algebra.block_dims, ranks):
        if not 0 <= r <= n:
            raise ValueError(f"rank {r} impossible in a {n}x{n} block")
        blocks.append(_gaussian(rng, (n, r)) @ _gaussian(rng, (r, n)))
    return AlgebraElement(algebra, blocks)


def random_rank_stratified(algebra: BlockAlgebra, seed=None) -> AlgebraElement:
    """Random element with independently uniform per-block ranks."""
    rng = as_rng(seed)
    ranks = [int(rng.integers(0, n + 1)) for n in algebra.block_dims]
    return random_of_rank(algebra, ranks, rng)
