"""Finite-difference gradient oracle.

Central differences only; deliberately independent of the autodiff tape so it
can arbitrate gradient correctness.  Keep it that way.
"""

import numpy as np

from .errors import ContractError, NumericError

# Shared tolerance contract for analytic-vs-numeric comparisons.
REL_TOL = 1e-4
ABS_FLOOR = 1e-7


def finite_difference_gradient(loss_fn, params, step=1e-5):
    """Central-difference gradient of a scalar function.

    Args:
        loss_fn: deterministic scalar function of a parameter array.
        params: the point at which to differentiate (any shape).
        step: perturbation size h; the estimate is (f(p+h e_i) - f(p-h e_i)) / 2h.

    Returns:
        Array of the same shape as `params`.
    """
    if step <= 0:
        raise ContractError(f"finite-difference step must be positive, got {step}")
    params = np.asarray(params, dtype=np.float64)
    grad = np.empty_like(params)
    flat = grad.reshape(-1)
    for i in range(params.size):
        bumped = params.copy().reshape(-1)
        bumped[i] += step
        hi = float(loss_fn(bumped.reshape(params.shape)))
        bumped[i] -= 2.0 * step
        lo = float(loss_fn(bumped.reshape(params.shape)))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(
                f"loss function non-finite at perturbed coordinate {i}"
            )
        flat[i] = (hi - lo) / (2.0 * step)
    return grad


def gradients_close(analytic, numeric, rel_tol=REL_TOL, abs_floor=ABS_FLOOR):
    """Elementwise |a - n| <= abs_floor + rel_tol * max(|a|, |n|)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return bool(np.all(np.abs(analytic - numeric) <= abs_floor + rel_tol * scale))


def max_gradient_error(analytic, numeric):
    """Worst-case relative error, with the absolute floor folded in."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ABS_FLOOR / REL_TOL)
    return float(np.max(np.abs(analytic - numeric) / scale))
