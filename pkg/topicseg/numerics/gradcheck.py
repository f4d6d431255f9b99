"""Central finite-difference verification of analytic gradients."""

from typing import Callable, Dict, Mapping

import numpy as np

from ..errors import NumericalError, ShapeError
from .tensor import Graph, Tensor, backward

ScalarFn = Callable[[Dict[str, Tensor]], Tensor]


def _evaluate(function: ScalarFn, params: Mapping[str, np.ndarray]) -> float:
    out = function({name: Tensor(array, name=name) for name, array in params.items()})
    if out.data.size != 1:
        raise ShapeError(f"grad_check needs a scalar function, got shape {out.shape}")
    value = out.item()
    if not np.isfinite(value):
        raise NumericalError(f"grad_check: function returned non-finite value {value}")
    return value


def grad_check(function: ScalarFn, params: Mapping[str, np.ndarray], epsilon: float = 1e-3,
               dtype=np.float64) -> float:
    """
    Compare analytic gradients against central differences at every coordinate.

    The comparison runs in 64-bit floats by default so the differences stay
    well above rounding noise; pass dtype=np.float32 to check at training
    precision. At nondifferentiable points (e.g. a tied max) the reported
    error can be large.

    Args:
        function: Maps a name -> Tensor mapping to a scalar Tensor
        params: Point at which to check
        epsilon: Finite-difference step (> 0)
        dtype: Floating type used for the check

    Returns:
        max |analytic - numeric| / max(1, |analytic|, |numeric|)

    Raises:
        ValueError: If epsilon is not positive
        NumericalError: If the function returns a non-finite value
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    point = {name: np.array(array, dtype=dtype) for name, array in params.items()}

    graph = Graph()
    out = function(graph.bind(point))
    if out.data.size != 1:
        raise ShapeError(f"grad_check needs a scalar function, got shape {out.shape}")
    if not np.isfinite(out.item()):
        raise NumericalError(f"grad_check: function returned non-finite value {out.item()}")
    analytic = backward(graph, out)

    worst = 0.0
    for name, array in point.items():
        flat = array.reshape(-1)
        grad = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            plus = _evaluate(function, point)
            flat[i] = original - epsilon
            minus = _evaluate(function, point)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            a = float(grad[i])
            error = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, error)
    return worst
