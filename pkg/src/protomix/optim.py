"""Adam parameter updates and the step-wise learning-rate schedule."""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import ConfigError, ShapeError


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for one flat parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must be in (0,1), got {value}")
        if not 0.0 < self.epsilon <= 1e-3:
            raise ConfigError(f"epsilon must be in (0, 1e-3], got {self.epsilon}")
        if self.first_moment.shape != self.second_moment.shape:
            raise ShapeError("Adam moment arrays must have identical shapes")


def init_adam(n_params, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
    return AdamState(
        first_moment=np.zeros(n_params),
        second_moment=np.zeros(n_params),
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(state, params, grads):
    """One bias-corrected Adam update; mutates `params` and `state` in place.

    Returns `params` for call-site convenience.
    """
    params = np.asarray(params)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ShapeError(
            f"adam_step: params {params.shape}, grads {grads.shape}, moments "
            f"{state.first_moment.shape} must all match"
        )
    state.step_count += 1
    backend.ops.adam_update(
        params,
        grads,
        state.first_moment,
        state.second_moment,
        state.step_count,
        state.learning_rate,
        state.beta1,
        state.beta2,
        state.epsilon,
    )
    return params


def learning_rate_at(base_lr, epoch, decay=0.95, every=10):
    """Multiplicative schedule: base_lr * decay^(epoch // every), epoch 0-based."""
    return base_lr * decay ** (epoch // every)
