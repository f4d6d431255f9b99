"""Dense tensor kernels, reverse-mode gradients, gradient checking, and the optimizer."""

from .gradcheck import grad_check
from .init import fan_in_bound, seeded_init
from .kernels import KERNELS, forward_kernel
from .optim import Adam, OptimizerState, adam_step, clip_global_norm
from .tensor import Graph, Tensor, backward, constants

__all__ = [
    "Adam",
    "Graph",
    "KERNELS",
    "OptimizerState",
    "Tensor",
    "adam_step",
    "backward",
    "clip_global_norm",
    "constants",
    "fan_in_bound",
    "forward_kernel",
    "grad_check",
    "seeded_init",
]
