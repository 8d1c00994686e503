# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``_kernels_py`` exactly."""
import numpy as np
from libc.math cimport sqrt


cdef inline double _dot(const double[::1] a, const double[::1] b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t t
    cdef double s = 0.0
    for t in range(n):
        s += a[t] * b[t]
    return s


def g_orthonormalize(B, GB, double rel_pivot):
    cdef double[:, ::1] q = np.array(B, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] gq = np.array(GB, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t k = q.shape[0], d = q.shape[1]
    cdef Py_ssize_t i, j, t, sweep
    cdef double c, nrm2, s, maxn = 0.0
    cdef Py_ssize_t failed = -1

    with nogil:
        for j in range(k):
            nrm2 = _dot(q[j], gq[j], d)
            if nrm2 > maxn:
                maxn = nrm2
        for j in range(k):
            for sweep in range(2):
                for i in range(j):
                    c = _dot(q[j], gq[i], d)
                    for t in range(d):
                        q[j, t] -= c * q[i, t]
                        gq[j, t] -= c * gq[i, t]
            nrm2 = _dot(q[j], gq[j], d)
            if not (nrm2 > rel_pivot * maxn):
                failed = j
                break
            s = 1.0 / sqrt(nrm2)
            for t in range(d):
                q[j, t] *= s
                gq[j, t] *= s
    return np.asarray(q), np.asarray(gq), failed


def residual_energy(V, GV, Q, GQ, w):
    cdef const double[:, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef const double[:, ::1] gv = np.ascontiguousarray(GV, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[:, ::1] gq = np.ascontiguousarray(GQ, dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], d = v.shape[1], k = q.shape[0]
    cdef Py_ssize_t i, j, t
    cdef double[::1] r = np.empty(d)
    cdef double[::1] gr = np.empty(d)
    cdef double c, total = 0.0

    with nogil:
        for i in range(n):
            for t in range(d):
                r[t] = v[i, t]
                gr[t] = gv[i, t]
            for j in range(k):
                c = _dot(r, gq[j], d)
                for t in range(d):
                    r[t] -= c * q[j, t]
                    gr[t] -= c * gq[j, t]
            total += ww[i] * _dot(r, gr, d)
    return total
