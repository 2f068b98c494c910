# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gram-matrix hot kernels.

Same API as htcit._gramops_py; fused loops avoid the intermediate n x n
temporaries of the numpy route and exploit symmetry.
"""

from libc.math cimport exp

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_sq_dists(double[:, ::1] X not None):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, k
    cdef double s, diff
    for i in range(n):
        D[i, i] = 0.0
        for j in range(i + 1, n):
            s = 0.0
            for k in range(m):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            D[i, j] = s
            D[j, i] = s
    return out


def rbf_gram(double[:, ::1] X not None, double gamma):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] K = out
    cdef Py_ssize_t i, j, k
    cdef double s, diff, v
    for i in range(n):
        K[i, i] = 1.0
        for j in range(i + 1, n):
            s = 0.0
            for k in range(m):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            v = exp(-gamma * s)
            K[i, j] = v
            K[j, i] = v
    return out


def center_gram(double[:, ::1] K not None):
    cdef Py_ssize_t n = K.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rbuf = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cbuf = np.zeros(n, dtype=np.float64)
    cdef double[::1] row = rbuf
    cdef double[::1] col = cbuf
    cdef Py_ssize_t i, j
    cdef double g = 0.0, v
    for i in range(n):
        for j in range(n):
            v = K[i, j]
            row[i] += v
            col[j] += v
            g += v
    for i in range(n):
        row[i] /= n
        col[i] /= n
    g /= n * n
    for i in range(n):
        for j in range(n):
            K[i, j] += g - row[i] - col[j]
    return None


def sum_hadamard(double[:, ::1] A not None, double[:, ::1] B not None):
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1]
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(n):
        for j in range(m):
            s += A[i, j] * B[i, j]
    return s


def hadamard_moments(double[:, ::1] A not None, double[:, ::1] B not None):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, j
    cdef double s = 0.0, dd = 0.0, q = 0.0, v
    for i in range(n):
        dd += A[i, i] * B[i, i]
        for j in range(n):
            v = A[i, j] * B[i, j]
            s += v
            q += v * v
    return s, dd, q


def perm_trace_stats(double[:, ::1] Kc not None, double[:, ::1] Lc not None,
                     cnp.int64_t[:, ::1] perms not None):
    cdef Py_ssize_t B = perms.shape[0], n = perms.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(B, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t b, i, j
    cdef cnp.int64_t pi
    cdef double s
    for b in range(B):
        s = 0.0
        for i in range(n):
            pi = perms[b, i]
            for j in range(n):
                s += Kc[i, j] * Lc[pi, perms[b, j]]
        o[b] = s
    return out
