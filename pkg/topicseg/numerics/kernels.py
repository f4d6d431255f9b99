"""
Forward kernels with their analytic backward rules.

Every kernel takes Tensors (raw arrays and Python numbers are promoted to
constants of the same dtype), computes its output with NumPy, checks that the
output is finite, and records itself on the inputs' graph when one is present.
Kernels preserve the floating dtype of their inputs.
"""

import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import NumericalError, ShapeError
from .tensor import Graph, Tensor

# Additive score for masked attention keys; exp() of it underflows to exactly 0
MASK_VALUE = -1e9

_GELU_C = math.sqrt(2.0 / math.pi)


# -----------------------------------------------------------------------------
# Plumbing
# -----------------------------------------------------------------------------


def _prepare(*values) -> Tuple[Tuple[Tensor, ...], np.dtype]:
    """Promote raw inputs to constant Tensors matching the traced inputs' dtype."""
    dtypes = [v.data.dtype for v in values if isinstance(v, Tensor)]
    dtype = np.result_type(*dtypes) if dtypes else np.dtype(np.float32)
    tensors = tuple(
        v if isinstance(v, Tensor) else Tensor(np.asarray(v, dtype=dtype)) for v in values
    )
    return tensors, dtype


def _graph_of(inputs: Sequence[Tensor]) -> Optional[Graph]:
    graph = None
    for t in inputs:
        if t.graph is None:
            continue
        if graph is None:
            graph = t.graph
        elif t.graph is not graph:
            raise ValueError("Kernel inputs belong to different graphs")
    return graph


def _emit(kind: str, value: np.ndarray, inputs: Tuple[Tensor, ...],
          backward: Callable, dtype: np.dtype) -> Tensor:
    value = np.asarray(value, dtype=dtype)
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"{kind}: produced non-finite values")
    graph = _graph_of(inputs)
    out = Tensor(value, graph)
    if graph is not None:
        graph.record(kind, inputs, out, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(kind: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{kind}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# -----------------------------------------------------------------------------
# Elementwise arithmetic
# -----------------------------------------------------------------------------


def add(a, b) -> Tensor:
    (a, b), dtype = _prepare(a, b)
    _check_broadcast("add", a, b)
    a_shape, b_shape = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

    return _emit("add", a.data + b.data, (a, b), backward, dtype)


def sub(a, b) -> Tensor:
    (a, b), dtype = _prepare(a, b)
    _check_broadcast("sub", a, b)
    a_shape, b_shape = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)

    return _emit("sub", a.data - b.data, (a, b), backward, dtype)


def mul(a, b) -> Tensor:
    (a, b), dtype = _prepare(a, b)
    _check_broadcast("mul", a, b)
    A, B = a.data, b.data

    def backward(g):
        return _unbroadcast(g * B, A.shape), _unbroadcast(g * A, B.shape)

    return _emit("mul", A * B, (a, b), backward, dtype)


def pow_(x, exponent: float) -> Tensor:
    """Elementwise x ** exponent for a constant exponent."""
    (x,), dtype = _prepare(x)
    X = x.data
    exponent = float(exponent)

    def backward(g):
        if exponent == 0.0:
            return (np.zeros_like(X),)
        return (g * exponent * X ** (exponent - 1.0),)

    return _emit("pow", X ** exponent, (x,), backward, dtype)


def clip(x, low: float, high: float) -> Tensor:
    """Clamp into [low, high]; gradient passes only inside the interval."""
    (x,), dtype = _prepare(x)
    X = x.data
    inside = (X >= low) & (X <= high)

    def backward(g):
        return (g * inside,)

    return _emit("clip", np.clip(X, low, high), (x,), backward, dtype)


# -----------------------------------------------------------------------------
# Linear algebra and shape manipulation
# -----------------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Batched matrix product over the last two axes (NumPy broadcasting)."""
    (a, b), dtype = _prepare(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}") from None
    A, B = a.data, b.data

    def backward(g):
        grad_a = g @ np.swapaxes(B, -1, -2)
        grad_b = np.swapaxes(A, -1, -2) @ g
        return _unbroadcast(grad_a, A.shape), _unbroadcast(grad_b, B.shape)

    return _emit("matmul", A @ B, (a, b), backward, dtype)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors, dtype = _prepare(*tensors)
    arrays = [t.data for t in tensors]
    try:
        value = np.concatenate(arrays, axis=axis)
    except ValueError:
        shapes = " and ".join(str(a.shape) for a in arrays)
        raise ShapeError(f"concat: incompatible shapes {shapes} on axis {axis}") from None
    ax = axis % value.ndim
    splits = np.cumsum([a.shape[ax] for a in arrays])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=ax))

    return _emit("concat", value, tensors, backward, dtype)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors, dtype = _prepare(*tensors)
    try:
        value = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = " and ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"stack: incompatible shapes {shapes}") from None
    ax = axis % value.ndim

    def backward(g):
        return tuple(np.take(g, i, axis=ax) for i in range(len(tensors)))

    return _emit("stack", value, tensors, backward, dtype)


def slice_(x, key) -> Tensor:
    """Basic (view) indexing: integers, slices, and Ellipsis only."""
    (x,), dtype = _prepare(x)
    key = key if isinstance(key, tuple) else (key,)
    for k in key:
        if not (isinstance(k, (int, np.integer, slice)) or k is Ellipsis):
            raise ShapeError(f"slice: only basic indexing is supported, got {type(k).__name__}")
    X = x.data
    try:
        value = X[key]
    except IndexError as e:
        raise ShapeError(f"slice: {e} for shape {X.shape}") from None

    def backward(g):
        grad = np.zeros_like(X)
        grad[key] = g
        return (grad,)

    return _emit("slice", value, (x,), backward, dtype)


def reshape(x, shape: Sequence[int]) -> Tensor:
    (x,), dtype = _prepare(x)
    original = x.shape
    try:
        value = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {original} into {tuple(shape)}") from None

    def backward(g):
        return (g.reshape(original),)

    return _emit("reshape", value, (x,), backward, dtype)


def transpose(x, axes: Sequence[int]) -> Tensor:
    (x,), dtype = _prepare(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"transpose: axes {axes} invalid for shape {x.shape}")
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _emit("transpose", np.transpose(x.data, axes), (x,), backward, dtype)


def gather(table, ids) -> Tensor:
    """Embedding lookup: rows of a 2-D table selected by an integer id array."""
    (table,), dtype = _prepare(table)
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise ShapeError(f"gather: table must be 2-D, got shape {table.shape}")
    if not np.issubdtype(ids.dtype, np.integer):
        raise ShapeError(f"gather: ids must be integers, got {ids.dtype}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(
            f"gather: ids must lie in [0, {table.shape[0]}), got range "
            f"[{ids.min()}, {ids.max()}] for table shape {table.shape}"
        )
    T = table.data

    def backward(g):
        grad = np.zeros_like(T)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, T.shape[1]))
        return (grad,)

    return _emit("gather", T[ids], (table,), backward, dtype)


# -----------------------------------------------------------------------------
# Nonlinearities
# -----------------------------------------------------------------------------


def sigmoid(x) -> Tensor:
    (x,), dtype = _prepare(x)
    X = x.data
    e = np.exp(-np.abs(X))
    value = np.where(X >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(dtype, copy=False)

    def backward(g):
        return (g * value * (1.0 - value),)

    return _emit("sigmoid", value, (x,), backward, dtype)


def tanh(x) -> Tensor:
    (x,), dtype = _prepare(x)
    value = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - value * value),)

    return _emit("tanh", value, (x,), backward, dtype)


def gelu(x) -> Tensor:
    """GELU, tanh approximation."""
    (x,), dtype = _prepare(x)
    X = x.data
    t = np.tanh(_GELU_C * (X + 0.044715 * X ** 3))

    def backward(g):
        local = 0.5 * (1.0 + t) + 0.5 * X * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * X * X)
        return (g * local,)

    return _emit("gelu", 0.5 * X * (1.0 + t), (x,), backward, dtype)


def softmax(x, axis: int = -1) -> Tensor:
    """Softmax with max-subtraction for stability."""
    (x,), dtype = _prepare(x)
    X = x.data
    e = np.exp(X - X.max(axis=axis, keepdims=True))
    value = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (value * (g - (g * value).sum(axis=axis, keepdims=True)),)

    return _emit("softmax", value, (x,), backward, dtype)


def log(x) -> Tensor:
    """Natural logarithm; inputs must be strictly positive."""
    (x,), dtype = _prepare(x)
    X = x.data
    if np.any(X <= 0):
        raise NumericalError(f"log: input has non-positive entries (min {X.min()})")

    def backward(g):
        return (g / X,)

    return _emit("log", np.log(X), (x,), backward, dtype)


# -----------------------------------------------------------------------------
# Reductions
# -----------------------------------------------------------------------------


def max_(x, axis: int) -> Tensor:
    """Maximum over one axis; the gradient goes to the first maximal entry."""
    (x,), dtype = _prepare(x)
    X = x.data
    index = np.expand_dims(np.argmax(X, axis=axis), axis)
    value = np.take_along_axis(X, index, axis=axis).squeeze(axis)

    def backward(g):
        grad = np.zeros_like(X)
        np.put_along_axis(grad, index, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _emit("max", value, (x,), backward, dtype)


def sum_(x, axis: Optional[int] = None) -> Tensor:
    (x,), dtype = _prepare(x)
    X = x.data

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.array(np.broadcast_to(g, X.shape)),)

    return _emit("sum", X.sum(axis=axis), (x,), backward, dtype)


def mean(x, axis: Optional[int] = None) -> Tensor:
    (x,), dtype = _prepare(x)
    X = x.data
    count = X.size if axis is None else X.shape[axis]

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.array(np.broadcast_to(g / count, X.shape)),)

    return _emit("mean", X.mean(axis=axis), (x,), backward, dtype)


# -----------------------------------------------------------------------------
# Composite kernels
# -----------------------------------------------------------------------------


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale by gamma and shift by beta."""
    (x, gamma, beta), dtype = _prepare(x, gamma, beta)
    X, G, B = x.data, gamma.data, beta.data
    if G.shape != (X.shape[-1],) or B.shape != (X.shape[-1],):
        raise ShapeError(
            f"layer_norm: gain/bias shapes {G.shape} and {B.shape} do not match input {X.shape}"
        )
    centered = X - X.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    lead = tuple(range(X.ndim - 1))

    def backward(g):
        g_xhat = g * G
        grad_x = inv_std * (
            g_xhat
            - g_xhat.mean(axis=-1, keepdims=True)
            - xhat * (g_xhat * xhat).mean(axis=-1, keepdims=True)
        )
        return grad_x, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _emit("layer_norm", xhat * G + B, (x, gamma, beta), backward, dtype)


def attention(q, k, v, keep_mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Scaled dot-product attention over the last two axes.

    Args:
        q: (..., S_q, d) queries
        k: (..., S_k, d) keys
        v: (..., S_k, d_v) values
        keep_mask: Boolean array broadcastable to (..., S_q, S_k); False marks
            keys a query must not attend to

    Returns:
        (..., S_q, d_v) attended values
    """
    (q, k, v), dtype = _prepare(q, k, v)
    Q, K, V = q.data, k.data, v.data
    if Q.shape[-1] != K.shape[-1] or K.shape[-2] != V.shape[-2]:
        raise ShapeError(f"attention: incompatible shapes {Q.shape}, {K.shape} and {V.shape}")
    scale = 1.0 / math.sqrt(Q.shape[-1])
    scores = (Q @ np.swapaxes(K, -1, -2)) * scale
    if keep_mask is not None:
        try:
            keep = np.broadcast_to(keep_mask, scores.shape)
        except ValueError:
            raise ShapeError(
                f"attention: mask shape {np.shape(keep_mask)} does not fit scores {scores.shape}"
            ) from None
        scores = np.where(keep, scores, MASK_VALUE).astype(dtype, copy=False)
    e = np.exp(scores - scores.max(axis=-1, keepdims=True))
    weights = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        g_weights = g @ np.swapaxes(V, -1, -2)
        g_v = np.swapaxes(weights, -1, -2) @ g
        g_scores = weights * (g_weights - (g_weights * weights).sum(axis=-1, keepdims=True))
        g_q = (g_scores @ K) * scale
        g_k = (np.swapaxes(g_scores, -1, -2) @ Q) * scale
        return _unbroadcast(g_q, Q.shape), _unbroadcast(g_k, K.shape), _unbroadcast(g_v, V.shape)

    return _emit("attention", weights @ V, (q, k, v), backward, dtype)


KERNELS: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "pow": pow_,
    "clip": clip,
    "matmul": matmul,
    "concat": concat,
    "stack": stack,
    "slice": slice_,
    "reshape": reshape,
    "transpose": transpose,
    "gather": gather,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "gelu": gelu,
    "softmax": softmax,
    "log": log,
    "max": max_,
    "sum": sum_,
    "mean": mean,
    "layer_norm": layer_norm,
    "attention": attention,
}

# Kernels whose first argument is a list of tensors rather than separate inputs
_SEQUENCE_KERNELS = {"concat", "stack"}


def forward_kernel(kind: str, inputs: Sequence, **options) -> Tensor:
    """
    Apply a kernel by name.

    Args:
        kind: Kernel identifier (a key of KERNELS)
        inputs: Positional tensor inputs
        **options: Kernel-specific options (axis, eps, keep_mask, ...)

    Returns:
        The output tensor

    Raises:
        ValueError: If the kernel name is unknown
    """
    try:
        kernel = KERNELS[kind]
    except KeyError:
        raise ValueError(f"Unknown kernel: {kind}") from None
    if kind in _SEQUENCE_KERNELS:
        return kernel(list(inputs), **options)
    return kernel(*inputs, **options)
