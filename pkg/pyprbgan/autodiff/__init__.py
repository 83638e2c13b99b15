"""
Reverse-mode differentiation over dense float64 tensors
"""

from pyprbgan.autodiff.tensor import Node, Tensor, backward, zero_grads
from pyprbgan.autodiff import ops
from pyprbgan.autodiff.ops import (
    add,
    sub,
    mul,
    div,
    neg,
    log,
    exp,
    mean,
    population_variance,
    leaky_relu,
    sigmoid,
    softplus,
    matmul,
    bce_with_logits,
)
from pyprbgan.autodiff.gradcheck import check_gradients, numerical_gradient, GradCheckResult

__all__ = [
    "Node",
    "Tensor",
    "backward",
    "zero_grads",
    "ops",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "log",
    "exp",
    "mean",
    "population_variance",
    "leaky_relu",
    "sigmoid",
    "softplus",
    "matmul",
    "bce_with_logits",
    "check_gradients",
    "numerical_gradient",
    "GradCheckResult",
]
