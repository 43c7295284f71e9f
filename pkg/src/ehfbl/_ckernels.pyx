# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the Monte Carlo hot loops; see _pykernels for semantics."""
import numpy as np

from libc.math cimport log2, M_LOG2E


def walk_stats(const double[::1] harvest, const double[::1] use, double threshold):
    cdef Py_ssize_t n = harvest.shape[0], k
    cdef double s = 0.0, smin
    cdef long first = 0
    if use.shape[0] != n:
        raise ValueError("length mismatch")
    if n == 0:
        raise ValueError("empty walk")
    with nogil:
        smin = harvest[0] - use[0]
        for k in range(n):
            s += harvest[k] - use[k]
            if s < smin:
                smin = s
            if first == 0 and s < -threshold:
                first = k + 1
    return smin, first, s


def info_densities(const double[:, ::1] book, const double[::1] w,
                   double noise_var, double out_var):
    cdef Py_ssize_t M = book.shape[0], n = book.shape[1], m, k
    cdef double ww = 0.0, d, acc, base
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] res = out
    if w.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for k in range(n):
            ww += w[k] * w[k]
        base = 0.5 * n * log2(out_var / noise_var) + M_LOG2E * ww / (2.0 * out_var)
        for m in range(M):
            acc = 0.0
            for k in range(n):
                d = book[m, k] - w[k]
                acc += d * d
            res[m] = base - M_LOG2E * acc / (2.0 * noise_var)
    return out
