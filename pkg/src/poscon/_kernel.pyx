# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled RK4 stepping kernel.

Same contract as ``poscon._kernel_py.rk4_span``; the inner matvec loops are
written out so a whole span runs without touching the interpreter.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()


cdef inline void _rhs(double[:, ::1] M, double[:, ::1] E,
                      double* z, double* d, double* out,
                      Py_ssize_t n, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += M[i, j] * z[j]
        for j in range(q):
            s += E[i, j] * d[j]
        out[i] = s


def rk4_span(double[:, ::1] drift, double[:, ::1] input_mat,
             double[:, ::1] dist_half, double[::1] state0,
             double step, double guard, double[:, ::1] out):
    """Advance ``z' = M z + E d(t)`` with classical RK4 (see python fallback)."""
    cdef Py_ssize_t n_steps = out.shape[0] - 1
    cdef Py_ssize_t n = drift.shape[0]
    cdef Py_ssize_t q = input_mat.shape[1]
    cdef double h = step
    cdef Py_ssize_t k, i
    cdef double v
    cdef int bad

    buf = np.empty((6, n), dtype=np.float64)
    cdef double[:, ::1] work = buf
    cdef double* z = &work[0, 0]
    cdef double* k1 = &work[1, 0]
    cdef double* k2 = &work[2, 0]
    cdef double* k3 = &work[3, 0]
    cdef double* k4 = &work[4, 0]
    cdef double* tmp = &work[5, 0]

    for i in range(n):
        z[i] = state0[i]
        out[0, i] = z[i]

    with nogil:
        for k in range(n_steps):
            _rhs(drift, input_mat, z, &dist_half[2 * k, 0], k1, n, q)
            for i in range(n):
                tmp[i] = z[i] + 0.5 * h * k1[i]
            _rhs(drift, input_mat, tmp, &dist_half[2 * k + 1, 0], k2, n, q)
            for i in range(n):
                tmp[i] = z[i] + 0.5 * h * k2[i]
            _rhs(drift, input_mat, tmp, &dist_half[2 * k + 1, 0], k3, n, q)
            for i in range(n):
                tmp[i] = z[i] + h * k3[i]
            _rhs(drift, input_mat, tmp, &dist_half[2 * k + 2, 0], k4, n, q)
            bad = 0
            for i in range(n):
                v = z[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                z[i] = v
                out[k + 1, i] = v
                if not isfinite(v) or fabs(v) > guard:
                    bad = 1
            if bad:
                with gil:
                    return k + 1
    return -1
