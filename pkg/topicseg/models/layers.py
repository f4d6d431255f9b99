"""Shared building blocks: parameter specs, affine maps, masked LSTMs, masked max-pooling."""

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..numerics import kernels as K
from ..numerics.init import fan_in_bound, seeded_init
from ..numerics.tensor import Tensor
from ..utils import stable_seed

# Additive score for padded positions in max-pooling
POOL_MASK = -1e9

# Emitted probabilities stay inside (0, 1) even when float32 softmax saturates
PROBABILITY_FLOOR = 1e-7


@dataclass(frozen=True)
class ParamSpec:
    """Name, shape and initialization scheme of one trainable array."""

    name: str
    shape: Tuple[int, ...]
    scheme: str = "uniform"
    bound: float = 0.1

    @property
    def size(self) -> int:
        return int(math.prod(self.shape))


def weight(name: str, fan_in: int, fan_out: int) -> ParamSpec:
    return ParamSpec(name, (fan_in, fan_out), "uniform", fan_in_bound(fan_in))


def bias(name: str, size: int) -> ParamSpec:
    return ParamSpec(name, (size,), "zeros")


def embedding(name: str, rows: int, dim: int) -> ParamSpec:
    return ParamSpec(name, (rows, dim), "uniform", fan_in_bound(dim))


def layer_norm_specs(prefix: str, dim: int) -> List[ParamSpec]:
    return [ParamSpec(f"{prefix}.gamma", (dim,), "ones"), ParamSpec(f"{prefix}.beta", (dim,), "zeros")]


def lstm_specs(prefix: str, input_dim: int, hidden_dim: int) -> List[ParamSpec]:
    """One LSTM direction; the four gates (i, f, g, o) are packed along the last axis."""
    return [
        weight(f"{prefix}.w_ih", input_dim, 4 * hidden_dim),
        ParamSpec(f"{prefix}.w_hh", (hidden_dim, 4 * hidden_dim), "uniform",
                  fan_in_bound(hidden_dim)),
        bias(f"{prefix}.bias", 4 * hidden_dim),
    ]


def bilstm_specs(prefix: str, input_dim: int, hidden_dim: int, layers: int = 2) -> List[ParamSpec]:
    specs: List[ParamSpec] = []
    for layer in range(layers):
        width = input_dim if layer == 0 else 2 * hidden_dim
        for direction in ("fwd", "bwd"):
            specs.extend(lstm_specs(f"{prefix}.l{layer}.{direction}", width, hidden_dim))
    return specs


def initialize(specs: List[ParamSpec], seed: int) -> Dict[str, np.ndarray]:
    """Materialize specs; every array gets its own seed derived from (seed, name)."""
    return {
        spec.name: seeded_init(spec.shape, spec.scheme, stable_seed(seed, spec.name), spec.bound)
        for spec in specs
    }


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return K.add(K.matmul(x, w), b)


def boundary_probability(logits: Tensor) -> Tensor:
    """Class-1 probability of a 2-way head, clamped to [PROBABILITY_FLOOR, 1 - PROBABILITY_FLOOR]."""
    p = K.softmax(logits, axis=-1)[:, 1]
    return K.clip(p, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)


def lstm_direction(p: Mapping[str, Tensor], prefix: str, x: Tensor, mask: np.ndarray,
                   reverse: bool = False) -> Tensor:
    """
    Run one LSTM direction over a right-padded batch.

    Args:
        p: Parameter tensors
        prefix: Parameter name prefix ("sentence.l0.fwd", ...)
        x: (B, T, D) inputs
        mask: (B, T) array, 1 for real steps and 0 for padding
        reverse: Iterate from the last step to the first

    Returns:
        (B, T, H) hidden states. Padded steps carry the previous state.
    """
    w_ih, w_hh, b = p[f"{prefix}.w_ih"], p[f"{prefix}.w_hh"], p[f"{prefix}.bias"]
    batch, steps = x.shape[0], x.shape[1]
    hidden = w_hh.shape[0]
    projected = linear(x, w_ih, b)
    dtype = projected.data.dtype
    h = Tensor(np.zeros((batch, hidden), dtype=dtype))
    c = Tensor(np.zeros((batch, hidden), dtype=dtype))
    outputs: List[Optional[Tensor]] = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        z = K.add(projected[:, t, :], K.matmul(h, w_hh))
        i = K.sigmoid(z[:, :hidden])
        f = K.sigmoid(z[:, hidden:2 * hidden])
        g = K.tanh(z[:, 2 * hidden:3 * hidden])
        o = K.sigmoid(z[:, 3 * hidden:])
        c_new = K.add(K.mul(f, c), K.mul(i, g))
        h_new = K.mul(o, K.tanh(c_new))
        m = mask[:, t:t + 1].astype(dtype)
        if m.all():
            h, c = h_new, c_new
        else:
            keep = 1.0 - m
            h = K.add(K.mul(h_new, m), K.mul(h, keep))
            c = K.add(K.mul(c_new, m), K.mul(c, keep))
        outputs[t] = h
    return K.stack(outputs, axis=1)


def bilstm(p: Mapping[str, Tensor], prefix: str, x: Tensor, mask: np.ndarray,
           layers: int = 2) -> Tensor:
    """Stacked bidirectional LSTM; returns (B, T, 2H) top-layer states."""
    out = x
    for layer in range(layers):
        forward = lstm_direction(p, f"{prefix}.l{layer}.fwd", out, mask)
        backward = lstm_direction(p, f"{prefix}.l{layer}.bwd", out, mask, reverse=True)
        out = K.concat([forward, backward], axis=-1)
    return out


def masked_max_pool(x: Tensor, mask: np.ndarray) -> Tensor:
    """Max over the time axis of (B, T, D), ignoring padded steps."""
    penalty = ((1.0 - mask.astype(np.float64)) * POOL_MASK)[:, :, None]
    return K.max_(K.add(x, penalty), axis=1)
