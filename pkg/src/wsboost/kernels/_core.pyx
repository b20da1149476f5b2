# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels for the localization hot loops."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def mean_pairwise_distance(double[:, ::1] x):
    """Mean Euclidean distance over all unordered pairs of rows."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double total = 0.0
    cdef double s, diff
    if n < 2:
        raise ValueError("need at least two rows")
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                s += diff * diff
            total += sqrt(s)
    return total / (0.5 * n * (n - 1))


def mean_indexed_distance(double[:, ::1] x, long[::1] ii, long[::1] jj):
    """Mean Euclidean distance over the row pairs (ii[m], jj[m])."""
    cdef Py_ssize_t m = ii.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t t, k, a, b
    cdef double total = 0.0
    cdef double s, diff
    if m == 0:
        raise ValueError("no pairs given")
    for t in range(m):
        a = ii[t]
        b = jj[t]
        s = 0.0
        for k in range(d):
            diff = x[a, k] - x[b, k]
            s += diff * diff
        total += sqrt(s)
    return total / m


def point_distances(double[:, ::1] x, double[::1] center):
    """Euclidean distance from every row of x to center."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, k
    cdef double s, diff
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        s = 0.0
        for k in range(d):
            diff = x[i, k] - center[k]
            s += diff * diff
        out[i] = sqrt(s)
    return out_arr
