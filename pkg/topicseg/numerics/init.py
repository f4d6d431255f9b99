"""Seeded parameter initialization."""

import math
from typing import Sequence

import numpy as np

from ..errors import ShapeError

SCHEMES = ("uniform", "zeros", "ones")


def seeded_init(shape: Sequence[int], scheme: str = "uniform", seed: int = 0,
                bound: float = 0.1) -> np.ndarray:
    """
    Create a deterministic float32 parameter array.

    Args:
        shape: Positive dimensions
        scheme: "uniform" (values in [-bound, bound]), "zeros", or "ones"
        seed: Non-negative 64-bit seed
        bound: Half-width for the uniform scheme (> 0)

    Returns:
        A new float32 array

    Raises:
        ShapeError: For an empty or non-positive shape
        ValueError: For an unknown scheme or non-positive bound
    """
    shape = tuple(int(d) for d in shape)
    if not shape or any(d <= 0 for d in shape):
        raise ShapeError(f"seeded_init: shape must have positive dimensions, got {shape}")
    if scheme == "zeros":
        return np.zeros(shape, dtype=np.float32)
    if scheme == "ones":
        return np.ones(shape, dtype=np.float32)
    if scheme != "uniform":
        raise ValueError(f"Unknown init scheme: {scheme} (expected one of {', '.join(SCHEMES)})")
    if bound <= 0:
        raise ValueError(f"Uniform bound must be positive, got {bound}")
    rng = np.random.default_rng(seed)
    values = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    return np.clip(values, -bound, bound)


def fan_in_bound(fan_in: int) -> float:
    """Half-width 1/sqrt(fan_in) used for weight matrices."""
    return 1.0 / math.sqrt(fan_in)
