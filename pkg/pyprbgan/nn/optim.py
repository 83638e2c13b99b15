"""
Optimizers

Descent steps on loss + weight_decay * ||W||^2. The L2 term is the KL part of
the variational objective under a Gaussian prior.
"""

from enum import Enum
from typing import List, Optional, Sequence
import logging

import numpy as np
from pydantic import BaseModel, Field

from pyprbgan.core.errors import DimensionError, NumericError
from pyprbgan.nn.layers import MlpParams

logger = logging.getLogger(__name__)


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class OptimizerConfig(BaseModel):
    """
    Optimizer settings

    Attributes:
        kind: sgd or adam
        learning_rate: Step size
        weight_decay: Coefficient of the L2 penalty
        beta1: Adam first-moment decay
        beta2: Adam second-moment decay
        eps: Adam denominator offset
    """
    kind: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float = Field(default=2e-4, gt=0.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)


class OptimizerState:
    """
    Optimizer configuration plus per-parameter moment buffers

    Attributes:
        config: OptimizerConfig
        step: Number of updates applied
        m: First-moment buffers (adam only)
        v: Second-moment buffers (adam only)
    """

    def __init__(self, config: Optional[OptimizerConfig] = None):
        self.config = config or OptimizerConfig()
        self.step = 0
        self.m: List[np.ndarray] = []
        self.v: List[np.ndarray] = []

    @property
    def learning_rate(self) -> float:
        return self.config.learning_rate

    @property
    def weight_decay(self) -> float:
        return self.config.weight_decay

    def _ensure_buffers(self, values: Sequence[np.ndarray]) -> None:
        if self.config.kind != OptimizerKind.ADAM:
            return
        if not self.m:
            self.m = [np.zeros_like(v) for v in values]
            self.v = [np.zeros_like(v) for v in values]

    def __repr__(self) -> str:
        return (
            f"OptimizerState(kind={self.config.kind.value}, "
            f"lr={self.learning_rate}, weight_decay={self.weight_decay}, step={self.step})"
        )


def apply_update(
    params: MlpParams,
    grads: Sequence[np.ndarray],
    opt: OptimizerState
) -> None:
    """
    Apply one descent step in place

    Args:
        params: Parameters to update
        grads: Loss gradients, ordered like params.nodes()
        opt: Optimizer state (moments and step counter are updated)

    Raises:
        DimensionError: If a gradient does not match its parameter
        NumericError: If any gradient is non-finite; params are left unchanged
    """
    nodes = params.nodes()
    if len(grads) != len(nodes):
        raise DimensionError(f"Expected {len(nodes)} gradients, got {len(grads)}")
    for i, (node, g) in enumerate(zip(nodes, grads)):
        if g.shape != node.shape:
            raise DimensionError(f"Gradient {i} shape {g.shape} != parameter shape {node.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"Non-finite gradient for parameter {i}; update skipped")

    cfg = opt.config
    values = [n.value for n in nodes]
    opt._ensure_buffers(values)
    opt.step += 1

    for i, (value, g) in enumerate(zip(values, grads)):
        if cfg.weight_decay > 0:
            g = g + 2.0 * cfg.weight_decay * value

        if cfg.kind == OptimizerKind.SGD:
            step = cfg.learning_rate * g
        else:
            opt.m[i] = cfg.beta1 * opt.m[i] + (1.0 - cfg.beta1) * g
            opt.v[i] = cfg.beta2 * opt.v[i] + (1.0 - cfg.beta2) * g * g
            m_hat = opt.m[i] / (1.0 - cfg.beta1 ** opt.step)
            v_hat = opt.v[i] / (1.0 - cfg.beta2 ** opt.step)
            step = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)

        # in place, so frozen views of these parameters stay in sync
        np.subtract(value, step, out=value)
