"""Adaptive-moment optimizer and global-norm gradient clipping."""

import math
from dataclasses import dataclass, field
from typing import Dict, MutableMapping, Mapping, Tuple

import numpy as np

from ..errors import ShapeError


@dataclass
class OptimizerState:
    """Step counter plus first/second moment estimates keyed by parameter name."""

    step_count: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: MutableMapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[MutableMapping[str, np.ndarray], OptimizerState]:
    """
    Apply one bias-corrected adaptive-moment update in place.

    Args:
        params: Parameter arrays, updated in place
        grads: Gradient per parameter name (same shapes)
        state: Moment estimates; created lazily for new parameter names
        lr: Learning rate (> 0)
        beta1: First-moment decay in [0, 1)
        beta2: Second-moment decay in [0, 1)
        eps: Denominator stabilizer

    Returns:
        The same params mapping and state, for chaining

    Raises:
        ValueError: If a hyper-parameter is out of range
        ShapeError: If a gradient or moment shape disagrees with its parameter
    """
    if lr <= 0:
        raise ValueError(f"Learning rate must be positive, got {lr}")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError(f"Betas must lie in [0, 1), got ({beta1}, {beta2})")

    for name, param in params.items():
        grad = grads.get(name)
        if grad is not None and grad.shape != param.shape:
            raise ShapeError(
                f"adam_step: gradient for {name} has shape {grad.shape}, parameter {param.shape}"
            )
        for moments in (state.first_moment, state.second_moment):
            if name in moments and moments[name].shape != param.shape:
                raise ShapeError(
                    f"adam_step: moment for {name} has shape {moments[name].shape}, "
                    f"parameter {param.shape}"
                )

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param)
        m = state.first_moment.setdefault(name, np.zeros_like(param))
        v = state.second_moment.setdefault(name, np.zeros_like(param))
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)

    return params, state


def clip_global_norm(grads: MutableMapping[str, np.ndarray], max_norm: float) -> float:
    """
    Rescale gradients in place so their joint L2 norm is at most max_norm.

    Returns:
        The norm before clipping
    """
    total = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for name in grads:
            grads[name] = grads[name] * np.asarray(scale, dtype=grads[name].dtype)
    return total


class Adam:
    """
    Stateful wrapper around adam_step holding the hyper-parameters.

    One instance belongs to one training run.
    """

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, clip_norm: float = 5.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.state = OptimizerState()

    def step(self, params: MutableMapping[str, np.ndarray],
             grads: MutableMapping[str, np.ndarray]) -> float:
        """Clip, then update. Returns the pre-clip gradient norm."""
        norm = clip_global_norm(grads, self.clip_norm)
        adam_step(params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
        return norm
