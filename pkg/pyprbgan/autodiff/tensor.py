"""
Graph nodes and reverse-mode differentiation

A Node wraps a dense float64 array (the Tensor) together with the references
and backward rule needed to propagate gradients from a scalar root.
"""

from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from pyprbgan.core.errors import ContractError, NumericError

logger = logging.getLogger(__name__)

# Dense row-major float64 array; product(shape) == size by construction.
Tensor = np.ndarray

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


def as_tensor(data: ArrayLike) -> Tensor:
    """Convert data to a C-contiguous float64 array, keeping its rank"""
    array = np.asarray(data, dtype=np.float64)
    if not array.flags.c_contiguous:
        array = np.ascontiguousarray(array)
    return array


def check_finite(value: np.ndarray, op: str) -> None:
    """Raise NumericError if value holds NaN or Inf"""
    if not np.all(np.isfinite(value)):
        raise NumericError(f"Non-finite value produced by '{op}'")


class Node:
    """
    A vertex of the computation graph

    Attributes:
        value: Forward value (float64 array)
        parents: Input nodes, in argument order
        op: Operation tag naming the backward rule
        grad: Gradient accumulator, same shape as value
        requires_grad: Whether gradients flow into this node
    """

    __slots__ = ("value", "parents", "op", "grad", "requires_grad", "_backward")

    def __init__(
        self,
        value: ArrayLike,
        parents: Tuple["Node", ...] = (),
        op: str = "leaf",
        requires_grad: bool = False,
        backward: Optional[BackwardFn] = None
    ):
        self.value = as_tensor(value)
        self.parents = parents
        self.op = op
        self.requires_grad = requires_grad
        self._backward = backward
        self.grad = np.zeros_like(self.value)

    @classmethod
    def parameter(cls, value: ArrayLike) -> "Node":
        """Create a trainable leaf"""
        value = as_tensor(value)
        check_finite(value, "parameter")
        return cls(value, requires_grad=True)

    @classmethod
    def constant(cls, value: ArrayLike) -> "Node":
        """Create a leaf that never receives gradients"""
        return cls(value, requires_grad=False)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def item(self) -> float:
        """Return the value of a single-element node as a Python float"""
        if self.value.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.value.reshape(-1)[0])

    def zero_grad(self) -> None:
        """Reset the gradient accumulator"""
        self.grad = np.zeros_like(self.value)

    def detach(self) -> "Node":
        """Return a constant node sharing this node's value"""
        return Node.constant(self.value)

    # Operator sugar; the implementations live in pyprbgan.autodiff.ops
    def __add__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.div(self, other)

    def __rtruediv__(self, other: Union["Node", float]) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.div(other, self)

    def __neg__(self) -> "Node":
        from pyprbgan.autodiff import ops
        return ops.neg(self)

    def __matmul__(self, other: "Node") -> "Node":
        from pyprbgan.autodiff import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.shape}, requires_grad={self.requires_grad})"


def topological_order(root: Node) -> List[Node]:
    """
    Return every node reachable from root, parents before children

    Traversal visits parents in argument order, so the order is fixed for a
    given graph.
    """
    order: List[Node] = []
    visited = set()
    stack: List[Tuple[Node, bool]] = [(root, False)]

    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in reversed(node.parents):
            if id(parent) not in visited:
                stack.append((parent, False))

    return order


def backward(root: Node) -> None:
    """
    Accumulate d(root)/d(node) into the grad buffer of every reachable node

    Gradients are added to whatever the buffers already hold, so calling
    backward twice without zero_grad() doubles them. Callers reset explicitly.

    Args:
        root: Scalar-shaped node

    Raises:
        ContractError: If root holds more than one element
    """
    if root.value.size != 1:
        raise ContractError(f"backward() needs a scalar root, got shape {root.shape}")

    order = topological_order(root)
    upstream = {id(root): np.ones_like(root.value)}

    for node in reversed(order):
        g = upstream.get(id(node))
        if g is None or not node.requires_grad or node._backward is None:
            continue
        parent_grads = node._backward(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in upstream:
                upstream[key] = upstream[key] + pg
            else:
                upstream[key] = pg

    for node in order:
        g = upstream.get(id(node))
        if g is not None and node.requires_grad:
            node.grad = node.grad + g.reshape(node.value.shape)

    logger.debug(f"backward: {len(order)} nodes")


def zero_grads(nodes: Iterable[Node]) -> None:
    """Reset the grad buffer of every node in nodes"""
    for node in nodes:
        node.zero_grad()
