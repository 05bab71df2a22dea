"""Kernel backend selection.

The compiled extension is preferred; set ``PENCILPRES_PURE_PYTHON=1`` to
force the NumPy fallback (e.g. for benchmarking or debugging).
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PENCILPRES_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

# The compiled LU is unblocked; past this size LAPACK via NumPy wins.
LARGE_BLOCK = 12


def _by_size(name):
    small, large = getattr(_impl, name), getattr(_pykernels, name)
    if small is large:
        return small

    def dispatch(y, *rest):
        return (large if y.shape[-1] > LARGE_BLOCK else small)(y, *rest)

    dispatch.__name__ = name
    dispatch.__doc__ = small.__doc__
    return dispatch


batch_det = _by_size("batch_det")
pencil_dets = _by_size("pencil_dets")
det_poly_coeffs = _by_size("det_poly_coeffs")
pencil_roots = _by_size("pencil_roots")

__all__ = ["BACKEND", "LARGE_BLOCK", "batch_det", "det_poly_coeffs", "pencil_dets", "pencil_roots"]
