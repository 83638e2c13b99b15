"""
Generator and discriminator evaluation for one sampled network
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from pyprbgan.autodiff import ops
from pyprbgan.autodiff.tensor import Node
from pyprbgan.gan.config import GanConfig
from pyprbgan.nn.layers import DropoutMaskSet, MlpParams, forward


@dataclass
class DiscOutput:
    """
    Output of one sampled discriminator on a batch

    Attributes:
        logit: [batch x 1] raw score D(x)
        uncertainty: [batch x 1] nonnegative u(x), only with an uncertainty head
        features: [batch x hidden] penultimate activations
    """
    logit: Node
    uncertainty: Optional[Node] = None
    features: Optional[Node] = None


def discriminate(
    disc_params: MlpParams,
    masks: Optional[DropoutMaskSet],
    x: Union[Node, np.ndarray],
    cfg: GanConfig
) -> DiscOutput:
    """
    Score a batch with one sampled discriminator

    The uncertainty head is the second output column passed through softplus,
    so u >= 0 always.
    """
    out, features = forward(disc_params, masks, x, return_features=True)
    if cfg.uses_uncertainty:
        logit = ops.take_columns(out, 0, 1)
        uncertainty = ops.softplus(ops.take_columns(out, 1, 2))
        return DiscOutput(logit=logit, uncertainty=uncertainty, features=features)
    return DiscOutput(logit=out, features=features)


def generate_batch(
    gen_params: MlpParams,
    masks: Optional[DropoutMaskSet],
    z: Union[Node, np.ndarray]
) -> Node:
    """Push a latent batch through one sampled generator"""
    return forward(gen_params, masks, z)
