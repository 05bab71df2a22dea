"""JSON encoding of elements, spectra and preserver forms.

Complex numbers are ``[re, im]`` pairs; matrices are row-major nested
lists. Documents carry ``"schema": 1``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .algebra import AlgebraElement, BlockAlgebra, Spectrum
from .errors import SchemaError

SCHEMA_VERSION = 1


def _c(z) -> list[float]:
    z = complex(z)
    # normalise -0.0 so equal values serialise identically
    return [z.real + 0.0, z.imag + 0.0]


def matrix_to_json(m) -> list:
    return [[_c(v) for v in row] for row in np.asarray(m)]


def element_to_json(x: AlgebraElement) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "block_dims": list(x.algebra.block_dims),
        "blocks": [matrix_to_json(b) for b in x.blocks],
    }


def _parse_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        re, im = float(value), 0.0
    elif (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        re, im = float(value[0]), float(value[1])
    else:
        raise SchemaError(f"{where}: expected [re, im], got {value!r}")
    if not (math.isfinite(re) and math.isfinite(im)):
        raise SchemaError(f"{where}: non-finite entry")
    return complex(re, im)


def matrix_from_json(data, n: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != n:
        raise SchemaError(f"{where}: expected {n} rows")
    out = np.empty((n, n), dtype=np.complex128)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"{where}, row {i}: expected {n} entries")
        for j, value in enumerate(row):
            out[i, j] = _parse_complex(value, f"{where}, entry ({i},{j})")
    return out


def _check_schema(doc):
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    version = doc.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version!r}")


def element_from_json(doc) -> AlgebraElement:
    _check_schema(doc)
    dims = doc.get("block_dims")
    if (
        not isinstance(dims, list)
        or not dims
        or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in dims)
    ):
        raise SchemaError("block_dims must be a non-empty list of positive integers")
    try:
        algebra = BlockAlgebra(dims)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    blocks = doc.get("blocks")
    if not isinstance(blocks, list) or len(blocks) != len(dims):
        raise SchemaError(f"blocks must be a list of {len(dims)} matrices")
    mats = [matrix_from_json(b, n, f"block {k}") for k, (b, n) in enumerate(zip(blocks, dims))]
    return AlgebraElement(algebra, mats)


def load_element(path) -> AlgebraElement:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return element_from_json(doc)


def spectrum_to_json(s: Spectrum) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "cluster_tol": s.cluster_tol,
        "entries": [{"value": _c(lam), "multiplicity": m} for lam, m in s.entries],
    }


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
