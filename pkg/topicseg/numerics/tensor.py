"""Tensors and the recording graph used for reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """
    A dense array plus the graph it was recorded on.

    Tensors created outside a graph (or from raw arrays) are constants: kernels
    still compute with them, but no gradient flows back into them. Leaf
    parameters are created through Graph.param and carry a name.
    """

    __slots__ = ("data", "graph", "name")

    def __init__(self, data, graph: Optional["Graph"] = None, name: Optional[str] = None):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float32)
        self.data = array
        self.graph = graph
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        """Return the value of a single-element tensor as a Python float."""
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label})"

    # Operators route through the kernel table; imported lazily to avoid a cycle
    def __add__(self, other):
        from . import kernels
        return kernels.add(self, other)

    def __radd__(self, other):
        from . import kernels
        return kernels.add(other, self)

    def __sub__(self, other):
        from . import kernels
        return kernels.sub(self, other)

    def __rsub__(self, other):
        from . import kernels
        return kernels.sub(other, self)

    def __mul__(self, other):
        from . import kernels
        return kernels.mul(self, other)

    def __rmul__(self, other):
        from . import kernels
        return kernels.mul(other, self)

    def __neg__(self):
        from . import kernels
        return kernels.mul(self, -1.0)

    def __matmul__(self, other):
        from . import kernels
        return kernels.matmul(self, other)

    def __getitem__(self, key):
        from . import kernels
        return kernels.slice_(self, key)


@dataclass
class Node:
    """One recorded kernel application."""

    kind: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Graph:
    """
    An append-only tape of kernel applications.

    Insertion order is a valid topological order because a node can only be
    recorded after all of its inputs exist.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.leaves: Dict[str, Tensor] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def param(self, name: str, data: np.ndarray) -> Tensor:
        """Register a trainable leaf. The array is shared, not copied."""
        if name in self.leaves:
            raise ValueError(f"Duplicate parameter name on graph: {name}")
        leaf = Tensor(data, graph=self, name=name)
        self.leaves[name] = leaf
        return leaf

    def bind(self, params: Mapping[str, np.ndarray]) -> Dict[str, Tensor]:
        """Register every array of a parameter mapping as a leaf."""
        return {name: self.param(name, array) for name, array in params.items()}

    def record(self, kind: str, inputs: Tuple[Tensor, ...], output: Tensor,
               backward: BackwardFn) -> None:
        self.nodes.append(Node(kind=kind, inputs=inputs, output=output, backward=backward))


def constants(params: Mapping[str, np.ndarray]) -> Dict[str, Tensor]:
    """Wrap a parameter mapping as untraced tensors for inference."""
    return {name: Tensor(array, name=name) for name, array in params.items()}


def backward(graph: Graph, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Propagate gradients from a scalar loss back to every leaf of the graph.

    Args:
        graph: The graph the loss was recorded on
        loss: A single-element tensor

    Returns:
        Mapping of leaf name to gradient array; leaves the loss does not reach
        get an all-zero gradient.

    Raises:
        ShapeError: If the loss is not a scalar
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    grads: Dict[int, np.ndarray] = {}
    if loss.graph is graph:
        grads[id(loss)] = np.ones_like(loss.data)

    for node in reversed(graph.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.backward(upstream)):
            if grad is None or tensor.graph is not graph:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad

    result: Dict[str, np.ndarray] = {}
    for name, leaf in graph.leaves.items():
        grad = grads.get(id(leaf))
        if grad is None:
            grad = np.zeros_like(leaf.data)
        result[name] = np.asarray(grad, dtype=leaf.data.dtype).reshape(leaf.shape)
    return result
