"""
Differentiable operations

Elementwise, reduction and matrix operations over Nodes. Each operation
computes its forward value, checks it is finite and registers the exact
backward rule. Only scalar-with-tensor broadcasting is supported; every other
shape mismatch is a DimensionError.
"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from pyprbgan.autodiff.tensor import Node, check_finite
from pyprbgan.core.errors import DimensionError, DomainError, NumericError

Operand = Union[Node, float, int, np.ndarray]

# Smallest denominator magnitude accepted by div
DIV_GUARD = 1e-12


def as_node(x: Operand) -> Node:
    """Wrap raw values as constant nodes"""
    if isinstance(x, Node):
        return x
    return Node.constant(x)


def _make(
    value: np.ndarray,
    parents: Tuple[Node, ...],
    op: str,
    backward
) -> Node:
    check_finite(value, op)
    requires_grad = any(p.requires_grad for p in parents)
    return Node(value, parents=parents, op=op, requires_grad=requires_grad,
                backward=backward if requires_grad else None)


def _is_scalar(node: Node) -> bool:
    return node.value.size == 1


def _broadcast_pair(a: Node, b: Node, op: str) -> None:
    if a.shape == b.shape or _is_scalar(a) or _is_scalar(b):
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not match")


def _reduce_to(grad: np.ndarray, node: Node) -> np.ndarray:
    """Sum a broadcast gradient back to the shape of node"""
    if grad.shape == node.shape:
        return grad
    return np.asarray(grad.sum()).reshape(node.shape)


# Binary elementwise

def add(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _broadcast_pair(a, b, "add")
    value = a.value + b.value

    def backward(g: np.ndarray):
        return _reduce_to(g, a), _reduce_to(g, b)

    return _make(value, (a, b), "add", backward)


def sub(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _broadcast_pair(a, b, "sub")
    value = a.value - b.value

    def backward(g: np.ndarray):
        return _reduce_to(g, a), _reduce_to(-g, b)

    return _make(value, (a, b), "sub", backward)


def mul(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _broadcast_pair(a, b, "mul")
    value = a.value * b.value

    def backward(g: np.ndarray):
        return _reduce_to(g * b.value, a), _reduce_to(g * a.value, b)

    return _make(value, (a, b), "mul", backward)


def div(a: Operand, b: Operand) -> Node:
    """
    Elementwise a / b

    Raises:
        NumericError: If any |denominator| < 1e-12
    """
    a, b = as_node(a), as_node(b)
    _broadcast_pair(a, b, "div")
    if np.any(np.abs(b.value) < DIV_GUARD):
        raise NumericError(f"div: denominator magnitude below {DIV_GUARD}")
    value = a.value / b.value

    def backward(g: np.ndarray):
        ga = g / b.value
        gb = -g * a.value / (b.value * b.value)
        return _reduce_to(ga, a), _reduce_to(gb, b)

    return _make(value, (a, b), "div", backward)


# Unary elementwise

def neg(a: Operand) -> Node:
    a = as_node(a)

    def backward(g: np.ndarray):
        return (-g,)

    return _make(-a.value, (a,), "neg", backward)


def log(a: Operand) -> Node:
    """
    Natural logarithm

    Raises:
        DomainError: If any input is non-positive
    """
    a = as_node(a)
    if np.any(a.value <= 0):
        raise DomainError("log: input must be strictly positive")

    def backward(g: np.ndarray):
        return (g / a.value,)

    return _make(np.log(a.value), (a,), "log", backward)


def exp(a: Operand) -> Node:
    a = as_node(a)
    value = np.exp(a.value)

    def backward(g: np.ndarray):
        return (g * value,)

    return _make(value, (a,), "exp", backward)


def square(a: Operand) -> Node:
    a = as_node(a)

    def backward(g: np.ndarray):
        return (2.0 * a.value * g,)

    return _make(a.value * a.value, (a,), "square", backward)


def leaky_relu(a: Operand, slope: float = 0.2) -> Node:
    a = as_node(a)
    positive = a.value > 0
    value = np.where(positive, a.value, slope * a.value)

    def backward(g: np.ndarray):
        return (np.where(positive, g, slope * g),)

    return _make(value, (a,), "leaky_relu", backward)


def sigmoid(a: Operand) -> Node:
    a = as_node(a)
    value = expit(a.value)

    def backward(g: np.ndarray):
        return (g * value * (1.0 - value),)

    return _make(value, (a,), "sigmoid", backward)


def softplus(a: Operand) -> Node:
    """log(1 + exp(a)), computed without overflow"""
    a = as_node(a)
    value = np.logaddexp(0.0, a.value)

    def backward(g: np.ndarray):
        return (g * expit(a.value),)

    return _make(value, (a,), "softplus", backward)


# Reductions

def _axis_count(a: Node, axis: Optional[int]) -> int:
    return a.value.size if axis is None else a.value.shape[axis]


def _expand(g: np.ndarray, a: Node, axis: Optional[int], keepdims: bool) -> np.ndarray:
    """Broadcast a reduced gradient back over the reduced axis"""
    if axis is None:
        return np.broadcast_to(np.asarray(g).reshape(()), a.shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, a.shape)


def sum(a: Operand, axis: Optional[int] = None, keepdims: bool = False) -> Node:  # noqa: A001
    a = as_node(a)
    value = np.asarray(a.value.sum(axis=axis, keepdims=keepdims))

    def backward(g: np.ndarray):
        return (np.array(_expand(g, a, axis, keepdims)),)

    return _make(value, (a,), "sum", backward)


def mean(a: Operand, axis: Optional[int] = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    n = _axis_count(a, axis)
    value = np.asarray(a.value.mean(axis=axis, keepdims=keepdims))

    def backward(g: np.ndarray):
        return (np.array(_expand(g, a, axis, keepdims)) / n,)

    return _make(value, (a,), "mean", backward)


def population_variance(
    a: Operand,
    axis: Optional[int] = None,
    keepdims: bool = False
) -> Node:
    """Divide-by-n variance, over all elements or along one axis"""
    a = as_node(a)
    n = _axis_count(a, axis)
    centred = a.value - a.value.mean(axis=axis, keepdims=True)
    value = np.asarray((centred * centred).mean(axis=axis, keepdims=keepdims))

    def backward(g: np.ndarray):
        return (np.array(_expand(g, a, axis, keepdims)) * (2.0 / n) * centred,)

    return _make(value, (a,), "population_variance", backward)


# Matrix operations

def matmul(a: Operand, b: Operand) -> Node:
    """
    Matrix product of [m x k] and [k x n]

    Raises:
        DimensionError: If operands are not 2-D or inner dimensions differ
    """
    a, b = as_node(a), as_node(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not align")
    value = a.value @ b.value

    def backward(g: np.ndarray):
        return g @ b.value.T, a.value.T @ g

    return _make(value, (a, b), "matmul", backward)


def add_bias(x: Operand, bias: Operand) -> Node:
    """Add a length-n bias vector to every row of an [m x n] node"""
    x, bias = as_node(x), as_node(bias)
    if x.value.ndim != 2 or bias.value.ndim != 1 or x.shape[1] != bias.shape[0]:
        raise DimensionError(f"add_bias: shapes {x.shape} and {bias.shape} do not align")

    def backward(g: np.ndarray):
        return g, g.sum(axis=0)

    return _make(x.value + bias.value, (x, bias), "add_bias", backward)


def mask_columns(w: Operand, mask: np.ndarray) -> Node:
    """
    Multiply column j of w (or entry j of a vector) by the constant mask[j]

    Masked entries contribute exactly zero downstream and receive zero gradient.
    """
    w = as_node(w)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 1 or w.shape[-1] != mask.shape[0]:
        raise DimensionError(f"mask_columns: mask {mask.shape} does not fit {w.shape}")

    def backward(g: np.ndarray):
        return (g * mask,)

    return _make(w.value * mask, (w,), "mask_columns", backward)


def take_columns(x: Operand, start: int, stop: int) -> Node:
    """Columns start..stop-1 of an [m x n] node"""
    x = as_node(x)
    if x.value.ndim != 2 or not 0 <= start < stop <= x.shape[1]:
        raise DimensionError(f"take_columns: [{start}:{stop}] invalid for {x.shape}")

    def backward(g: np.ndarray):
        full = np.zeros_like(x.value)
        full[:, start:stop] = g
        return (full,)

    return _make(x.value[:, start:stop].copy(), (x,), "take_columns", backward)


def concat_rows(nodes: Sequence[Operand]) -> Node:
    """Stack 2-D nodes with equal column counts on top of each other"""
    parents = tuple(as_node(n) for n in nodes)
    widths = {p.shape[1:] for p in parents}
    if len(widths) != 1 or any(p.value.ndim != 2 for p in parents):
        raise DimensionError(f"concat_rows: incompatible shapes {[p.shape for p in parents]}")
    bounds = np.cumsum([0] + [p.shape[0] for p in parents])

    def backward(g: np.ndarray):
        return tuple(g[bounds[i]:bounds[i + 1]] for i in range(len(parents)))

    return _make(np.concatenate([p.value for p in parents], axis=0), parents,
                 "concat_rows", backward)


def hstack(nodes: Sequence[Operand]) -> Node:
    """Place [m x 1] nodes side by side as an [m x N] node"""
    parents = tuple(as_node(n) for n in nodes)
    if any(p.value.ndim != 2 or p.shape[1] != 1 for p in parents):
        raise DimensionError(f"hstack: expects [m x 1] nodes, got {[p.shape for p in parents]}")
    if len({p.shape for p in parents}) != 1:
        raise DimensionError(f"hstack: row counts differ {[p.shape for p in parents]}")

    def backward(g: np.ndarray):
        return tuple(g[:, i:i + 1] for i in range(len(parents)))

    return _make(np.concatenate([p.value for p in parents], axis=1), parents,
                 "hstack", backward)


def sort_columns(x: Operand) -> Node:
    """Sort every column ascending; gradients follow the sorting permutation"""
    x = as_node(x)
    if x.value.ndim != 2:
        raise DimensionError(f"sort_columns: expects a 2-D node, got {x.shape}")
    order = np.argsort(x.value, axis=0, kind="stable")

    def backward(g: np.ndarray):
        full = np.zeros_like(x.value)
        np.put_along_axis(full, order, g, axis=0)
        return (full,)

    return _make(np.take_along_axis(x.value, order, axis=0), (x,), "sort_columns", backward)


# Losses

def bce_with_logits(logits: Operand, targets: np.ndarray) -> Node:
    """
    Mean binary cross-entropy computed directly from logits

    Uses max(x, 0) - x*t + log(1 + exp(-|x|)), so large logits never overflow.

    Args:
        logits: Raw scores
        targets: Array of the same shape with entries in {0, 1}

    Returns:
        Scalar node

    Raises:
        DimensionError: If shapes differ
        DomainError: If a target is not 0 or 1
    """
    logits = as_node(logits)
    targets = np.broadcast_to(np.asarray(targets, dtype=np.float64), logits.shape) \
        if np.ndim(targets) == 0 else np.asarray(targets, dtype=np.float64)
    if targets.shape != logits.shape:
        raise DimensionError(
            f"bce_with_logits: logits {logits.shape} vs targets {targets.shape}"
        )
    if not np.all((targets == 0.0) | (targets == 1.0)):
        raise DomainError("bce_with_logits: targets must be 0 or 1")

    x = logits.value
    n = x.size
    value = np.asarray(
        (np.maximum(x, 0.0) - x * targets + np.log1p(np.exp(-np.abs(x)))).mean()
    )

    def backward(g: np.ndarray):
        return (g * (expit(x) - targets) / n,)

    return _make(value, (logits,), "bce_with_logits", backward)


def squared_error(predictions: Operand, target: float) -> Node:
    """Mean of (prediction - target)^2"""
    predictions = as_node(predictions)
    return mean(square(sub(predictions, target)))


def stack_losses(losses: List[Node]) -> Node:
    """Arithmetic mean of scalar nodes"""
    total = losses[0]
    for loss in losses[1:]:
        total = add(total, loss)
    return div(total, float(len(losses)))
