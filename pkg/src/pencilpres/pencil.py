"""Spectrum of a linear pencil ``lam -> lam x + y``: the ``lam`` where it is singular."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    Tolerances,
    Verdict,
    _defective_groups,
    _merge_close,
    as_rng,
    block_singular_ratios,
    classify_ratio,
)
from .errors import AlgebraMismatch, ConvergenceFailure

# number of random lam at which a block must read Singular to count as identically singular
_IDENTITY_PROBES = 3


@dataclass(frozen=True)
class PencilSpectrum:
    entries: tuple[tuple[complex, int], ...]
    identically_singular: bool
    singular_blocks: tuple[int, ...]

    @property
    def values(self) -> list[complex]:
        return [lam for lam, _ in self.entries]

    def to_dict(self) -> dict:
        from .serialize import SCHEMA_VERSION, _c

        return {
            "schema": SCHEMA_VERSION,
            "identically_singular": self.identically_singular,
            "singular_blocks": list(self.singular_blocks),
            "roots": [{"value": _c(lam), "multiplicity": m} for lam, m in self.entries],
        }


def _block_identically_singular(xb, yb, rng, tol: Tolerances) -> bool:
    scale_x, scale_y = np.linalg.norm(xb, 2), np.linalg.norm(yb, 2)
    for _ in range(_IDENTITY_PROBES):
        lam = complex(rng.standard_normal(), rng.standard_normal()) * (1 + scale_y / max(scale_x, 1e-300))
        m = lam * xb + yb
        ratio = block_singular_ratios(AlgebraElement.single(m), abs(lam) * scale_x + scale_y)[0]
        if classify_ratio(ratio, tol) is not Verdict.SINGULAR:
            return False
    return True


def _block_roots(xb: np.ndarray, yb: np.ndarray, index: int, tol: Tolerances) -> list[list[complex]]:
    ratio = block_singular_ratios(AlgebraElement.single(xb))[0]
    if ratio > tol.ambiguity_band:
        # regular leading part: ordinary eigenvalues, with defective grouping
        m = -np.linalg.solve(xb, yb)
        try:
            values = np.linalg.eigvals(m)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"eigenvalue iteration failed on block {index}: {exc}", block=index)
        return _defective_groups(values, float(np.linalg.norm(m, 2)))
    try:
        alpha, beta = scipy.linalg.eigvals(-yb, xb, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"generalized eigenproblem failed on block {index}: {exc}", block=index)
    size = np.abs(alpha) + np.abs(beta)
    finite = np.abs(beta) > 1e-10 * size
    return [[complex(a / b)] for a, b in zip(alpha[finite], beta[finite])]


def pencil_spectrum(x: AlgebraElement, y: AlgebraElement, tol: Tolerances = DEFAULT_TOL, seed=0) -> PencilSpectrum:
    """Finite roots of ``det(lam x + y)`` with multiplicities.

    Blocks whose determinant vanishes identically are flagged and contribute
    no roots. With ``x = 1`` and ``y = -a`` the result is the spectrum of ``a``.
    """
    if x.algebra != y.algebra:
        raise AlgebraMismatch("pencil operands live in different algebras")
    rng = as_rng(seed)
    groups: list[list[complex]] = []
    singular = []
    for k, (xb, yb) in enumerate(zip(x.blocks, y.blocks)):
        if _block_identically_singular(xb, yb, rng, tol):
            singular.append(k)
            continue
        groups.extend(_block_roots(xb, yb, k, tol))
    merged = _merge_close(groups, tol.cluster_tol)
    entries = sorted(
        ((complex(np.mean(g)), len(g)) for g in merged),
        key=lambda e: (round(e[0].real, 12), round(e[0].imag, 12)),
    )
    return PencilSpectrum(tuple(entries), bool(singular), tuple(singular))


def pencil_grid(
    x: AlgebraElement,
    y: AlgebraElement,
    radius: float,
    points: int = 21,
    tol: Tolerances = DEFAULT_TOL,
) -> list[dict]:
    """Verdict of ``lam x + y`` on a ``points x points`` grid over ``[-radius, radius]^2``."""
    if x.algebra != y.algebra:
        raise AlgebraMismatch("pencil operands live in different algebras")
    axis = np.linspace(-radius, radius, points)
    out = []
    for im in axis:
        for re in axis:
            lam = complex(re, im)
            scale = abs(lam) * x.norm() + y.norm()
            ratio = min(block_singular_ratios(lam * x + y, scale))
            out.append({"re": float(re) + 0.0, "im": float(im) + 0.0, "ratio": ratio,
                        "verdict": classify_ratio(ratio, tol).value})
    return out
