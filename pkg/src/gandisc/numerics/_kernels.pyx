# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels. Mirrors ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp

cnp.import_array()


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps,
                double bc1, double bc2):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi, mh, vh
    for i in range(n):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        mh = m[i] / bc1
        vh = v[i] / bc2
        p[i] = p[i] - lr * mh / (sqrt(vh) + eps)


def momentum_update(double[::1] p, const double[::1] g, double[::1] buf,
                    double lr, double momentum):
    cdef Py_ssize_t i, n = p.shape[0]
    for i in range(n):
        buf[i] = momentum * buf[i] + g[i]
        p[i] = p[i] - lr * buf[i]


def leaky_relu(const double[::1] x, double slope):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = x[i] if x[i] > 0.0 else slope * x[i]
    return out


def leaky_relu_grad(const double[::1] x, const double[::1] g, double slope):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = g[i] if x[i] > 0.0 else slope * g[i]
    return out


def softmax_rows(const double[:, ::1] z):
    cdef Py_ssize_t i, j, r = z.shape[0], c = z.shape[1]
    out = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double mx, s
    for i in range(r):
        mx = z[i, 0]
        for j in range(1, c):
            if z[i, j] > mx:
                mx = z[i, j]
        s = 0.0
        for j in range(c):
            o[i, j] = exp(z[i, j] - mx)
            s = s + o[i, j]
        for j in range(c):
            o[i, j] = o[i, j] / s
    return out
