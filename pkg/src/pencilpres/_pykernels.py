"""NumPy implementations of the determinant kernels.

Same signatures as the compiled ``_ckernels`` module; used when the
extension is not built or ``PENCILPRES_PURE_PYTHON`` is set.
"""

import numpy as np


def batch_det(mats):
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.shape[0] == 0:
        return np.empty(0, dtype=np.complex128)
    if mats.shape[1] == 0:
        return np.ones(mats.shape[0], dtype=np.complex128)
    return np.linalg.det(mats)


def pencil_dets(y, a, nodes):
    y = np.asarray(y, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    nodes = np.asarray(nodes, dtype=np.complex128)
    return batch_det(y[None, :, :] + nodes[:, None, None] * a[None, :, :])


def det_poly_coeffs(y, a, nodes, vander_inv):
    return np.asarray(vander_inv) @ pencil_dets(y, a, nodes)


def pencil_roots(y, a, nodes, vander_inv, trunc):
    coeffs = det_poly_coeffs(y, a, nodes, vander_inv)
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0:
        return np.empty(0, dtype=np.complex128), True
    deg = int(np.nonzero(mags >= trunc * top)[0][-1])
    if deg == 0:
        return np.empty(0, dtype=np.complex128), False
    return np.roots(coeffs[: deg + 1][::-1]), False
