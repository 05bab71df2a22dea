# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled determinant kernels for small dense complex matrices."""

import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_lapack cimport zgeev

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs1(cplx z) nogil:
    # |re| + |im| is enough for pivot selection
    return (z.real if z.real >= 0 else -z.real) + (z.imag if z.imag >= 0 else -z.imag)


cdef cplx _lu_det(cplx[:, ::1] m) nogil:
    """Determinant by in-place LU with partial pivoting; destroys ``m``."""
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t i, j, k, piv
    cdef double best, cur
    cdef cplx det = 1.0, tmp, factor
    for k in range(n):
        piv = k
        best = cabs1(m[k, k])
        for i in range(k + 1, n):
            cur = cabs1(m[i, k])
            if cur > best:
                best = cur
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            for j in range(n):
                tmp = m[k, j]
                m[k, j] = m[piv, j]
                m[piv, j] = tmp
            det = -det
        det = det * m[k, k]
        for i in range(k + 1, n):
            factor = m[i, k] / m[k, k]
            if factor != 0:
                for j in range(k + 1, n):
                    m[i, j] = m[i, j] - factor * m[k, j]
    return det


def batch_det(mats):
    """Determinants of a stack of square complex matrices, shape (m, n, n)."""
    cdef const cplx[:, :, ::1] src = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef Py_ssize_t count = src.shape[0], n = src.shape[1]
    cdef cplx[:, ::1] work = np.empty((n, n), dtype=np.complex128)
    out = np.empty(count, dtype=np.complex128)
    cdef cplx[::1] res = out
    cdef Py_ssize_t s, i, j
    with nogil:
        for s in range(count):
            for i in range(n):
                for j in range(n):
                    work[i, j] = src[s, i, j]
            res[s] = _lu_det(work)
    return out


def pencil_dets(y, a, nodes):
    """det(y + t a) for every t in ``nodes``."""
    cdef const cplx[:, ::1] yv = np.ascontiguousarray(y, dtype=np.complex128)
    cdef const cplx[:, ::1] av = np.ascontiguousarray(a, dtype=np.complex128)
    cdef const cplx[::1] tv = np.ascontiguousarray(nodes, dtype=np.complex128)
    cdef Py_ssize_t n = yv.shape[0], count = tv.shape[0]
    cdef cplx[:, ::1] work = np.empty((n, n), dtype=np.complex128)
    out = np.empty(count, dtype=np.complex128)
    cdef cplx[::1] res = out
    cdef Py_ssize_t s, i, j
    cdef cplx t
    with nogil:
        for s in range(count):
            t = tv[s]
            for i in range(n):
                for j in range(n):
                    work[i, j] = yv[i, j] + t * av[i, j]
            res[s] = _lu_det(work)
    return out


def det_poly_coeffs(y, a, nodes, vander_inv):
    """Ascending coefficients of t -> det(y + t a).

    ``vander_inv`` is the inverse Vandermonde matrix of ``nodes``; the
    determinant values at the nodes are mapped through it.
    """
    cdef const cplx[:, ::1] yv = np.ascontiguousarray(y, dtype=np.complex128)
    cdef const cplx[:, ::1] av = np.ascontiguousarray(a, dtype=np.complex128)
    cdef const double[::1] tv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[:, ::1] vinv = np.ascontiguousarray(vander_inv, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], count = tv.shape[0]
    cdef cplx[:, ::1] work = np.empty((n, n), dtype=np.complex128)
    cdef cplx[::1] vals = np.empty(count, dtype=np.complex128)
    out = np.zeros(count, dtype=np.complex128)
    cdef cplx[::1] res = out
    cdef Py_ssize_t s, i, j
    cdef double t
    with nogil:
        for s in range(count):
            t = tv[s]
            for i in range(n):
                for j in range(n):
                    work[i, j] = yv[i, j] + t * av[i, j]
            vals[s] = _lu_det(work)
        for i in range(count):
            for s in range(count):
                res[i] = res[i] + vinv[i, s] * vals[s]
    return out


def pencil_roots(y, a, nodes, vander_inv, double trunc):
    """Roots of t -> det(y + t a) after dropping negligible top coefficients.

    Returns ``(roots, degenerate)``; ``degenerate`` is True when every
    interpolated coefficient is exactly zero. Roots are the eigenvalues of
    the companion matrix, computed by LAPACK zgeev.
    """
    coeffs = det_poly_coeffs(y, a, nodes, vander_inv)
    cdef cplx[::1] c = coeffs
    cdef Py_ssize_t m = c.shape[0], k
    cdef double top = 0.0, mag
    for k in range(m):
        mag = abs(c[k])
        if mag > top:
            top = mag
    if top == 0.0:
        return np.empty(0, dtype=np.complex128), True
    cdef Py_ssize_t deg = 0
    for k in range(m):
        if abs(c[k]) >= trunc * top:
            deg = k
    if deg == 0:
        return np.empty(0, dtype=np.complex128), False

    cdef int n = <int>deg, lda = <int>deg, ldv = 1, lwork = 4 * <int>deg, info = 0
    # companion matrix, column-major: first row holds -c[deg-1-j]/c[deg]
    comp_arr = np.zeros((deg, deg), dtype=np.complex128, order="F")
    cdef cplx[::1, :] comp = comp_arr
    cdef cplx lead = c[deg]
    for k in range(deg):
        comp[0, k] = -c[deg - 1 - k] / lead
    for k in range(1, deg):
        comp[k, k - 1] = 1.0
    roots = np.empty(deg, dtype=np.complex128)
    cdef cplx[::1] w = roots
    cdef cplx[::1] work = np.empty(lwork, dtype=np.complex128)
    cdef double[::1] rwork = np.empty(2 * deg, dtype=np.float64)
    cdef cplx dummy = 0
    cdef char jobn = b"N"
    with nogil:
        zgeev(&jobn, &jobn, &n, &comp[0, 0], &lda, &w[0], &dummy, &ldv,
              &dummy, &ldv, &work[0], &lwork, &rwork[0], &info)
    if info != 0:
        raise ArithmeticError(f"zgeev failed with info={info}")
    return roots, False
