# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transfer-block kernels; same API as ``_kernels_py``."""

import numpy as np
from libc.math cimport sqrt, cosh, sinh, cos, sin


cdef inline void _block(double w, double h, double* a, double* b, double* c, double* d) noexcept nogil:
    cdef double s, ch, sh, k, cs, sn
    if w > 0.0:
        s = sqrt(w)
        ch = cosh(s * h)
        sh = sinh(s * h)
        a[0] = ch; b[0] = sh / s; c[0] = s * sh; d[0] = ch
    elif w < 0.0:
        k = sqrt(-w)
        cs = cos(k * h)
        sn = sin(k * h)
        a[0] = cs; b[0] = sn / k; c[0] = -k * sn; d[0] = cs
    else:
        a[0] = 1.0; b[0] = h; c[0] = 0.0; d[0] = 1.0


def block(double w, double h):
    cdef double a, b, c, d
    _block(w, h, &a, &b, &c, &d)
    return a, b, c, d


def transfer_product(lengths, w):
    cdef const double[:] L = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef const double[:] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t i, n = L.shape[0]
    cdef double a = 1.0, b = 0.0, c = 0.0, d = 1.0
    cdef double p, q, r, s, na, nb, nc, nd
    with nogil:
        for i in range(n):
            _block(W[i], L[i], &p, &q, &r, &s)
            na = p * a + q * c
            nb = p * b + q * d
            nc = r * a + s * c
            nd = r * b + s * d
            a = na; b = nb; c = nc; d = nd
    return a, b, c, d


def propagate_pc(lengths, w, double u, double du):
    cdef const double[:] L = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef const double[:] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t i, n = L.shape[0]
    cdef double p, q, r, s, nu
    with nogil:
        for i in range(n):
            _block(W[i], L[i], &p, &q, &r, &s)
            nu = p * u + q * du
            du = r * u + s * du
            u = nu
    return u, du


def trajectory_pc(lengths, w, double u, double du):
    cdef const double[:] L = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef const double[:] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t i, n = L.shape[0]
    us_arr = np.empty(n + 1)
    dus_arr = np.empty(n + 1)
    cdef double[:] us = us_arr
    cdef double[:] dus = dus_arr
    cdef double p, q, r, s, nu
    us[0] = u
    dus[0] = du
    with nogil:
        for i in range(n):
            _block(W[i], L[i], &p, &q, &r, &s)
            nu = p * u + q * du
            du = r * u + s * du
            u = nu
            us[i + 1] = u
            dus[i + 1] = du
    return us_arr, dus_arr
