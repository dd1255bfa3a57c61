"""Pure-numpy implementations of the hot kernels.

This module is the reference backend: `_fastops` (the Cython extension)
implements the same signatures with fused single-pass loops.  Matrix products
and FFTs are *not* part of the kernel surface — numpy's BLAS/pocketfft
bindings already run at native speed and both backends call them directly.

All 2-D inputs are C-contiguous float64; callers guarantee this.
"""

import numpy as np

NAME = "python"


def row_logsumexp(x):
    """log(sum(exp(x), axis=1)) with max-subtraction stabilization."""
    m = np.max(x, axis=1)
    return m + np.log(np.sum(np.exp(x - m[:, None]), axis=1))


def row_logsumexp_grad(x, out, gout):
    """d row_logsumexp / dx, contracted with the output gradient `gout`."""
    return np.exp(x - out[:, None]) * gout[:, None]


def row_softmax(x):
    """Row-wise softmax with max-subtraction stabilization."""
    e = np.exp(x - np.max(x, axis=1)[:, None])
    return e / np.sum(e, axis=1)[:, None]


def row_softmax_grad(y, gout):
    """Softmax backward given the forward output `y`."""
    return y * (gout - np.sum(gout * y, axis=1)[:, None])


def row_weighted_logsumexp(x, w):
    """log(sum(w * exp(x), axis=1)) stabilized over the support of w.

    The max is taken over entries with w > 0 so rows whose weight mass sits far
    below the plain row maximum do not underflow to log(0).  Every row of w
    must carry positive mass.
    """
    masked = np.where(w > 0.0, x, -np.inf)
    m = np.max(masked, axis=1)
    return m + np.log(np.sum(w * np.exp(x - m[:, None]), axis=1))


def row_weighted_logsumexp_grad(x, w, out, gout):
    """Backward of row_weighted_logsumexp: w * exp(x - out) * gout."""
    return w * np.exp(x - out[:, None]) * gout[:, None]


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x, gout):
    return np.where(x > 0.0, gout, 0.0)


def tanh(x):
    return np.tanh(x)


def tanh_grad(y, gout):
    """Tanh backward given the forward output `y`."""
    return gout * (1.0 - y * y)


def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, updating params/m/v in place.

    `t` is the 1-based step count *after* incrementing.
    """
    m *= beta1
    m += (1.0 - beta1) * grads
    v *= beta2
    v += (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
