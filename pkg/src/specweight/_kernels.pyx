# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
from libc.math cimport sqrt, fabs

cdef double HUGE = 1e300


def power_table(x, int deg):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef int k
    out = np.empty((n, deg + 1))
    cdef double[:, ::1] o = out
    for i in range(n):
        o[i, 0] = 1.0
        for k in range(1, deg + 1):
            o[i, k] = o[i, k - 1] * xv[i]
    return out


def legendre_table(t, int deg):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], i
    cdef int k
    out = np.empty((n, deg + 1))
    cdef double[:, ::1] o = out
    for i in range(n):
        o[i, 0] = 1.0
        if deg >= 1:
            o[i, 1] = tv[i]
        for k in range(1, deg):
            o[i, k + 1] = ((2 * k + 1) * tv[i] * o[i, k] - k * o[i, k - 1]) / (k + 1)
    return out


def product_matrix(tables, exps):
    cdef const Py_ssize_t[:, ::1] e = np.ascontiguousarray(exps, dtype=np.intp)
    cdef Py_ssize_t K = e.shape[0], d = e.shape[1]
    cdef const double[:, ::1] t0 = np.ascontiguousarray(tables[0])
    cdef Py_ssize_t n = t0.shape[0], i, k, j
    out = np.empty((n, K))
    cdef double[:, ::1] o = out
    cdef const double[:, ::1] tj
    for i in range(n):
        for k in range(K):
            o[i, k] = t0[i, e[k, 0]]
    for j in range(1, d):
        tj = np.ascontiguousarray(tables[j])
        for i in range(n):
            for k in range(K):
                o[i, k] *= tj[i, e[k, j]]
    return out


cdef void _point_products(const double[::1] x, const double[::1] lo, const double[::1] hi,
                          const Py_ssize_t[:, ::1] e, int deg, double[:, ::1] tab,
                          double[::1] prod):
    cdef Py_ssize_t d = x.shape[0], K = e.shape[0], j, k
    cdef double t
    for j in range(d):
        t = (2.0 * x[j] - (lo[j] + hi[j])) / (hi[j] - lo[j])
        tab[j, 0] = 1.0
        if deg >= 1:
            tab[j, 1] = t
        for k in range(1, deg):
            tab[j, k + 1] = ((2 * k + 1) * t * tab[j, k] - k * tab[j, k - 1]) / (k + 1)
    for k in range(K):
        prod[k] = tab[0, e[k, 0]]
        for j in range(1, d):
            prod[k] *= tab[j, e[k, j]]


def point_basis(x, lo, hi, exps, coeffs, Py_ssize_t nrows):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] e = np.ascontiguousarray(exps, dtype=np.intp)
    cdef const double[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t K = e.shape[0], r, k
    cdef int deg = int(np.max(exps)) if K else 0
    tab = np.empty((xv.shape[0], deg + 1))
    prod = np.empty(K)
    _point_products(xv, lov, hiv, e, deg, tab, prod)
    cdef double[::1] p = prod
    out = np.zeros(nrows)
    cdef double[::1] o = out
    cdef double acc
    for r in range(nrows):
        acc = 0.0
        for k in range(K):
            acc += C[r, k] * p[k]
        o[r] = acc
    return out


def seq_objective(x, lo, hi, exps, coeffs, q, V, u, double s, double reg=0.0):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] e = np.ascontiguousarray(exps, dtype=np.intp)
    cdef const double[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[:, ::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t K = e.shape[0], m1 = qv.shape[0], m = Vv.shape[0], r, k
    cdef int deg = int(np.max(exps)) if K else 0
    cdef double[:, ::1] tab = np.empty((xv.shape[0], deg + 1))
    cdef double[::1] prod = np.empty(K)
    cdef double[::1] c = np.empty(m1)
    _point_products(xv, lov, hiv, e, deg, tab, prod)
    cdef double acc, cmax = 1.0, qc = 0.0
    for r in range(m1):
        acc = 0.0
        for k in range(K):
            acc += C[r, k] * prod[k]
        c[r] = acc
        if fabs(acc) > cmax:
            cmax = fabs(acc)
        qc += qv[r] * acc
    if fabs(qc) <= 1e-13 * cmax:
        return HUGE
    cdef double alpha = s / qc
    cdef double total = alpha * alpha, ar
    for r in range(m):
        acc = 0.0
        for k in range(m1):
            acc += Vv[r, k] * c[k]
        ar = uv[r] - alpha * acc
        total += ar * ar
    return sqrt(total) + reg * cmax / fabs(qc)
