"""
Adam over a flat float64 parameter vector.

The trainer flattens every model parameter (quantum angles and classical
tables) into one vector so the optimizer state maps one-to-one onto the
checkpoint's parameter sections.
"""
from dataclasses import dataclass, replace

import numpy as np

from errors import ShapeError, TrainingError


@dataclass(frozen=True)
class OptimState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.first_moment.shape != self.second_moment.shape:
            raise ShapeError(
                f"Moment shapes differ: {self.first_moment.shape} vs {self.second_moment.shape}"
            )
        if self.step_count < 0:
            raise ShapeError(f"step_count must be >= 0, got {self.step_count}")

    @classmethod
    def zeros(cls, n_params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        return cls(
            first_moment=np.zeros(n_params, dtype=np.float64),
            second_moment=np.zeros(n_params, dtype=np.float64),
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )

    @property
    def n_params(self):
        return self.first_moment.shape[0]


def adam_step(params, grads, opt):
    """
    One bias-corrected Adam update

    Args:
        params: (P,) current parameters
        grads: (P,) gradients
        opt: OptimState

    Returns:
        (new params, new OptimState); inputs are not modified
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != opt.first_moment.shape:
        raise ShapeError(
            f"Shapes disagree: params {params.shape}, grads {grads.shape}, moments {opt.first_moment.shape}"
        )
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise TrainingError(f"Non-finite gradient at parameter index {int(bad[0])} ({grads[bad[0]]})")

    t = opt.step_count + 1
    m = opt.beta1 * opt.first_moment + (1 - opt.beta1) * grads
    v = opt.beta2 * opt.second_moment + (1 - opt.beta2) * grads ** 2
    m_hat = m / (1 - opt.beta1 ** t)
    v_hat = v / (1 - opt.beta2 ** t)
    new_params = params - opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.epsilon)
    return new_params, replace(opt, first_moment=m, second_moment=v, step_count=t)
