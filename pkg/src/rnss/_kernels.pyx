# cython: language_level=3
"""Compiled interpolation kernels (first barycentric form).

Same contracts as ``rnss._kernels_py``; see that module for the formulas.
"""
import numpy as np

from libc.stdlib cimport malloc, free


cdef inline void _weights(const double* nodes, Py_ssize_t m, double* w) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double p
    for j in range(m):
        p = 1.0
        for k in range(m):
            if k != j:
                p *= nodes[j] - nodes[k]
        w[j] = 1.0 / p


def bary_weights(nodes):
    cdef double[::1] xs = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    out = np.empty(m)
    cdef double[::1] w = out
    if m:
        _weights(&xs[0], m, &w[0])
    return out


def interp_eval(nodes, values, double x):
    cdef double[::1] xs = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[:, ::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    cdef Py_ssize_t K = vals.shape[1]
    out = np.zeros(K)
    cdef double[::1] res = out
    cdef Py_ssize_t j, k
    cdef double ell = 1.0, c
    for j in range(m):
        if x == xs[j]:
            for k in range(K):
                res[k] = vals[j, k]
            return out
    cdef double* w = <double*> malloc(m * sizeof(double))
    if w == NULL:
        raise MemoryError()
    try:
        with nogil:
            _weights(&xs[0], m, w)
            for j in range(m):
                ell *= x - xs[j]
            for j in range(m):
                c = w[j] / (x - xs[j])
                for k in range(K):
                    res[k] += c * vals[j, k]
            for k in range(K):
                res[k] *= ell
    finally:
        free(w)
    return out


def basis_matrix(nodes, points):
    cdef double[::1] xs = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] ps = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0], P = ps.shape[0]
    out = np.zeros((P, m))
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, hit
    cdef double ell, x
    cdef double* w = <double*> malloc(max(m, 1) * sizeof(double))
    if w == NULL:
        raise MemoryError()
    try:
        with nogil:
            _weights(&xs[0], m, w)
            for i in range(P):
                x = ps[i]
                hit = -1
                for j in range(m):
                    if x == xs[j]:
                        hit = j
                        break
                if hit >= 0:
                    res[i, hit] = 1.0
                    continue
                ell = 1.0
                for j in range(m):
                    ell *= x - xs[j]
                for j in range(m):
                    res[i, j] = ell * w[j] / (x - xs[j])
    finally:
        free(w)
    return out


def share_eval(secrets, witness, ys, points):
    cdef double[::1] sv = np.ascontiguousarray(secrets, dtype=np.float64)
    cdef double[:, ::1] wx = np.ascontiguousarray(witness, dtype=np.float64)
    cdef double[:, ::1] wy = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] ps = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t N = sv.shape[0], t = wx.shape[1], P = ps.shape[0]
    cdef Py_ssize_t m = t + 1
    out = np.empty((N, P))
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, k, hit
    cdef double ell, acc, x
    cdef double* nodes = <double*> malloc(m * sizeof(double))
    cdef double* vals = <double*> malloc(m * sizeof(double))
    cdef double* w = <double*> malloc(m * sizeof(double))
    if nodes == NULL or vals == NULL or w == NULL:
        free(nodes)
        free(vals)
        free(w)
        raise MemoryError()
    try:
        with nogil:
            for i in range(N):
                nodes[0] = 0.0
                vals[0] = sv[i]
                for j in range(t):
                    nodes[j + 1] = wx[i, j]
                    vals[j + 1] = wy[i, j]
                _weights(nodes, m, w)
                for j in range(m):
                    w[j] *= vals[j]
                for k in range(P):
                    x = ps[k]
                    hit = -1
                    for j in range(m):
                        if x == nodes[j]:
                            hit = j
                            break
                    if hit >= 0:
                        res[i, k] = vals[hit]
                        continue
                    ell = 1.0
                    acc = 0.0
                    for j in range(m):
                        ell *= x - nodes[j]
                        acc += w[j] / (x - nodes[j])
                    res[i, k] = ell * acc
    finally:
        free(nodes)
        free(vals)
        free(w)
    return out
