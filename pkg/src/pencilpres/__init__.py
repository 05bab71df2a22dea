"""Invertibility preservers and spectral tools on direct sums of matrix algebras."""

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    Spectrum,
    Tolerances,
    Verdict,
    determinant_verdict,
    identity,
    inverse,
    is_invertible,
    matrix_unit,
    spectral_radius,
    spectrum,
    zero,
)
from .errors import PencilError
from .kernels import BACKEND
from .pencil import PencilSpectrum, pencil_spectrum
from .preserver import BlackBoxMap, CheckReport, PreserverForm, pencil_condition_check, reconstruct, synthesize
from .rank_trace import RankReport, classical_rank_oracle, idempotent_decomposition, spectral_rank, trace
from .separation import (
    SeparationWitness,
    radical_membership_test,
    separate_any,
    separate_invertible,
    separate_rank_one,
    subharmonic_scan,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "BACKEND", "BlackBoxMap", "BlockAlgebra", "CheckReport", "DEFAULT_TOL",
    "PencilError", "PencilSpectrum", "PreserverForm", "RankReport", "SeparationWitness", "Spectrum",
    "Tolerances", "Verdict", "classical_rank_oracle", "determinant_verdict", "idempotent_decomposition",
    "identity", "inverse", "is_invertible", "matrix_unit", "pencil_condition_check", "pencil_spectrum",
    "radical_membership_test", "reconstruct", "separate_any", "separate_invertible", "separate_rank_one",
    "spectral_radius", "spectral_rank", "spectrum", "subharmonic_scan", "synthesize", "trace", "zero",
]
