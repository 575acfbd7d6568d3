# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics match ``_fallback`` bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef enum:
    LEAF = 32


def pairwise_sum(const double[::1] a):
    """Deterministic tree reduction: sequential leaves of 32, then pairwise."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t nleaf = (n + LEAF - 1) // LEAF
    cdef Py_ssize_t m = 1
    cdef Py_ssize_t i, j, start, stop
    cdef double acc
    if n == 0:
        return 0.0
    while m < nleaf:
        m *= 2
    cdef double[::1] buf = np.zeros(m, dtype=np.float64)
    for i in range(nleaf):
        start = i * LEAF
        stop = start + LEAF
        if stop > n:
            stop = n
        acc = a[start]
        for j in range(start + 1, stop):
            acc = acc + a[j]
        # padded slots contribute exact zeros in the fallback
        for j in range(stop, start + LEAF):
            acc = acc + 0.0
        buf[i] = acc
    while m > 1:
        m //= 2
        for i in range(m):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
    return buf[0]


def fd_d2_lastaxis(const double[:, ::1] f, double h):
    """Second derivative along the last axis (order 4 inside, order 2 at the edges)."""
    cdef Py_ssize_t rows = f.shape[0], n = f.shape[1], r, i
    cdef double ih2 = 1.0 / (h * h), c12 = 1.0 / (12.0 * h * h)
    out_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for r in range(rows):
        out[r, 0] = (2.0 * f[r, 0] - 5.0 * f[r, 1] + 4.0 * f[r, 2] - f[r, 3]) * ih2
        out[r, 1] = (f[r, 0] - 2.0 * f[r, 1] + f[r, 2]) * ih2
        for i in range(2, n - 2):
            out[r, i] = (-f[r, i - 2] + 16.0 * f[r, i - 1] - 30.0 * f[r, i]
                         + 16.0 * f[r, i + 1] - f[r, i + 2]) * c12
        out[r, n - 2] = (f[r, n - 3] - 2.0 * f[r, n - 2] + f[r, n - 1]) * ih2
        out[r, n - 1] = (2.0 * f[r, n - 1] - 5.0 * f[r, n - 2] + 4.0 * f[r, n - 3]
                         - f[r, n - 4]) * ih2
    return out_arr


def fd_d1_lastaxis(const double[:, ::1] f, double h):
    """First derivative along the last axis (order 4 inside, order 2 at the edges)."""
    cdef Py_ssize_t rows = f.shape[0], n = f.shape[1], r, i
    cdef double i2h = 1.0 / (2.0 * h), c12 = 1.0 / (12.0 * h)
    out_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for r in range(rows):
        out[r, 0] = (-3.0 * f[r, 0] + 4.0 * f[r, 1] - f[r, 2]) * i2h
        out[r, 1] = (f[r, 2] - f[r, 0]) * i2h
        for i in range(2, n - 2):
            out[r, i] = (f[r, i - 2] - 8.0 * f[r, i - 1] + 8.0 * f[r, i + 1]
                         - f[r, i + 2]) * c12
        out[r, n - 2] = (f[r, n - 1] - f[r, n - 3]) * i2h
        out[r, n - 1] = (3.0 * f[r, n - 1] - 4.0 * f[r, n - 2] + f[r, n - 3]) * i2h
    return out_arr


def mixed_det2(const double[:, :, ::1] a, const double[:, :, ::1] b):
    """Pointwise mixed determinant of two stacks of 2x2 matrices."""
    cdef Py_ssize_t m = a.shape[0], i
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(m):
        out[i] = 0.5 * (a[i, 0, 0] * b[i, 1, 1] + a[i, 1, 1] * b[i, 0, 0]
                        - a[i, 0, 1] * b[i, 1, 0] - a[i, 1, 0] * b[i, 0, 1])
    return out_arr


def legendre_max(const double[:, ::1] mu, const double[:, ::1] x, const double[::1] p):
    """For each dual point return max_j <mu_i, x_j> - p_j and the argmax."""
    cdef Py_ssize_t m = mu.shape[0], nx = x.shape[0], d = mu.shape[1]
    cdef Py_ssize_t i, j, k, best
    cdef double v, bv
    val_arr = np.empty(m, dtype=np.float64)
    arg_arr = np.empty(m, dtype=np.int64)
    cdef double[::1] val = val_arr
    cdef long long[::1] arg = arg_arr
    for i in range(m):
        bv = -INFINITY
        best = 0
        for j in range(nx):
            v = -p[j]
            for k in range(d):
                v = v + mu[i, k] * x[j, k]
            if v > bv:
                bv = v
                best = j
        val[i] = bv
        arg[i] = best
    return val_arr, arg_arr
