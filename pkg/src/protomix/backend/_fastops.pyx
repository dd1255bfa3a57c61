# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused Cython implementations of the hot kernels.

Semantics mirror `pyops`; each kernel makes a single pass over its operands
instead of allocating numpy temporaries.  Stay in sync with pyops when
changing either module.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, tanh as ctanh

cnp.import_array()

NAME = "cython"


def row_logsumexp(double[:, ::1] x):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(r):
        m = x[i, 0]
        for j in range(1, c):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(c):
            s += exp(x[i, j] - m)
        o[i] = m + log(s)
    return out


def row_logsumexp_grad(double[:, ::1] x, double[::1] out, double[::1] gout):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] gin = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] g = gin
    cdef Py_ssize_t i, j
    for i in range(r):
        for j in range(c):
            g[i, j] = exp(x[i, j] - out[i]) * gout[i]
    return gin


def row_softmax(double[:, ::1] x):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(r):
        m = x[i, 0]
        for j in range(1, c):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(c):
            o[i, j] = exp(x[i, j] - m)
            s += o[i, j]
        for j in range(c):
            o[i, j] /= s
    return out


def row_softmax_grad(double[:, ::1] y, double[:, ::1] gout):
    cdef Py_ssize_t r = y.shape[0], c = y.shape[1]
    cdef cnp.ndarray[double, ndim=2] gin = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] g = gin
    cdef Py_ssize_t i, j
    cdef double dot
    for i in range(r):
        dot = 0.0
        for j in range(c):
            dot += gout[i, j] * y[i, j]
        for j in range(c):
            g[i, j] = y[i, j] * (gout[i, j] - dot)
    return gin


def row_weighted_logsumexp(double[:, ::1] x, double[:, ::1] w):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double m, s
    cdef bint seen
    for i in range(r):
        # max over the support of w only; rows with no mass are the caller's
        # contract violation, mirror pyops by emitting -inf -> log(0)
        seen = False
        m = 0.0
        for j in range(c):
            if w[i, j] > 0.0 and (not seen or x[i, j] > m):
                m = x[i, j]
                seen = True
        if not seen:
            o[i] = -np.inf
            continue
        s = 0.0
        for j in range(c):
            s += w[i, j] * exp(x[i, j] - m)
        o[i] = m + log(s)
    return out


def row_weighted_logsumexp_grad(double[:, ::1] x, double[:, ::1] w,
                                double[::1] out, double[::1] gout):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] gin = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] g = gin
    cdef Py_ssize_t i, j
    for i in range(r):
        for j in range(c):
            g[i, j] = w[i, j] * exp(x[i, j] - out[i]) * gout[i]
    return gin


def relu(x):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(x).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef double[::1] xi = flat, oi = out
    cdef Py_ssize_t i, n = flat.shape[0]
    for i in range(n):
        oi[i] = xi[i] if xi[i] > 0.0 else 0.0
    return out.reshape(np.asarray(x).shape)


def relu_grad(x, gout):
    cdef cnp.ndarray[double, ndim=1] xf = np.ascontiguousarray(x).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] gf = np.ascontiguousarray(gout).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xf)
    cdef double[::1] xi = xf, gi = gf, oi = out
    cdef Py_ssize_t i, n = xf.shape[0]
    for i in range(n):
        oi[i] = gi[i] if xi[i] > 0.0 else 0.0
    return out.reshape(np.asarray(x).shape)


def tanh(x):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(x).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef double[::1] xi = flat, oi = out
    cdef Py_ssize_t i, n = flat.shape[0]
    for i in range(n):
        oi[i] = ctanh(xi[i])
    return out.reshape(np.asarray(x).shape)


def tanh_grad(y, gout):
    cdef cnp.ndarray[double, ndim=1] yf = np.ascontiguousarray(y).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] gf = np.ascontiguousarray(gout).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(yf)
    cdef double[::1] yi = yf, gi = gf, oi = out
    cdef Py_ssize_t i, n = yf.shape[0]
    for i in range(n):
        oi[i] = gi[i] * (1.0 - yi[i] * yi[i])
    return out.reshape(np.asarray(y).shape)


def adam_update(double[::1] params, double[::1] grads, double[::1] m,
                double[::1] v, long t, double lr, double beta1, double beta2,
                double eps):
    cdef Py_ssize_t i, n = params.shape[0]
    cdef double bc1 = 1.0 - beta1**t
    cdef double bc2 = 1.0 - beta2**t
    cdef double m_hat, v_hat
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i]
        m_hat = m[i] / bc1
        v_hat = v[i] / bc2
        params[i] -= lr * m_hat / (sqrt(v_hat) + eps)
