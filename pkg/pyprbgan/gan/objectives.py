"""
GAN objectives

All losses are minimised. Implements:
- Non-saturating BCE losses (vanilla NSGAN and Prb-GAN)
- Least-squares losses on raw logits (LSGAN baseline)
- Uncertainty-weighted discriminator loss (prb_v1, prb_v2)
- Score-set variance reward for the generator (prb_v2)
- Sliced Wasserstein distance over discriminator features (swgan, prb_swgan)
"""

from typing import Callable, Dict, List, Optional, Sequence
import logging
import threading

import numpy as np

from pyprbgan.autodiff import ops
from pyprbgan.autodiff.tensor import Node
from pyprbgan.core.errors import ConfigError, ContractError, DimensionError
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.networks import DiscOutput

logger = logging.getLogger(__name__)

# Tolerance on |column norm - 1| before a projection is renormalised
PROJECTION_NORM_TOL = 1e-9

_non_unit_projections = 0
_projection_lock = threading.Lock()


def non_unit_projection_count() -> int:
    """Number of projection matrices that had to be renormalised"""
    return _non_unit_projections


def reset_non_unit_projection_count() -> None:
    global _non_unit_projections
    with _projection_lock:
        _non_unit_projections = 0


def weighted_logit(logit: Node, uncertainty: Node, b1: float) -> Node:
    """
    Uncertainty-weighted score D'(x) = D(x) / (u(x) + b1)

    Larger uncertainty pulls the score towards 0 (probability 0.5). b1 > 0
    keeps the denominator away from zero when u = 0.

    Args:
        logit: Raw discriminator scores
        uncertainty: Nonnegative uncertainties, same shape
        b1: Positive bias

    Returns:
        Weighted scores
    """
    if b1 <= 0:
        raise ContractError(f"b1 must be positive, got {b1}")
    return ops.div(logit, ops.add(uncertainty, b1))


def score(output: DiscOutput, cfg: GanConfig) -> Node:
    """D'(x) when the discriminator has an uncertainty head, D(x) otherwise"""
    if output.uncertainty is None:
        return output.logit
    return weighted_logit(output.logit, output.uncertainty, cfg.b1)


# Per-sample discriminator losses

def disc_loss_ns(real: DiscOutput, fake: DiscOutput, cfg: GanConfig) -> Node:
    """BCE(D(x), 1) + BCE(D(G(z)), 0)"""
    return ops.add(ops.bce_with_logits(real.logit, 1.0), ops.bce_with_logits(fake.logit, 0.0))


def disc_loss_ls(real: DiscOutput, fake: DiscOutput, cfg: GanConfig) -> Node:
    """0.5 * [mean((D(x) - 1)^2) + mean(D(G(z))^2)]"""
    return ops.mul(0.5, ops.add(ops.squared_error(real.logit, 1.0),
                                ops.squared_error(fake.logit, 0.0)))


def disc_loss_weighted(real: DiscOutput, fake: DiscOutput, cfg: GanConfig) -> Node:
    """
    BCE of weighted scores plus the mean predicted uncertainty

    BCE(D'(x), 1) + mean u(x) + BCE(D'(G(z)), 0) + mean u(G(z)). The penalty
    stops the discriminator from declaring everything uncertain.
    """
    if real.uncertainty is None or fake.uncertainty is None:
        raise ContractError("Weighted discriminator loss needs an uncertainty head")
    real_term = ops.add(ops.bce_with_logits(score(real, cfg), 1.0), ops.mean(real.uncertainty))
    fake_term = ops.add(ops.bce_with_logits(score(fake, cfg), 0.0), ops.mean(fake.uncertainty))
    return ops.add(real_term, fake_term)


# Per-sample generator losses

def gen_loss_ns(fake: DiscOutput, cfg: GanConfig) -> Node:
    """Non-saturating loss -log D(G(z)) = BCE(D(G(z)), 1)"""
    return ops.bce_with_logits(score(fake, cfg), 1.0)


def gen_loss_ls(fake: DiscOutput, cfg: GanConfig) -> Node:
    """0.5 * mean((D(G(z)) - 1)^2)"""
    return ops.mul(0.5, ops.squared_error(fake.logit, 1.0))


# Losses over N sampled discriminators

def _check_sample_count(outputs: Sequence[DiscOutput], cfg: GanConfig, name: str) -> None:
    if len(outputs) != cfg.n_mc:
        raise ContractError(f"{name}: expected {cfg.n_mc} discriminator samples, got {len(outputs)}")


def disc_loss_v1(
    outputs_real: Sequence[DiscOutput],
    outputs_fake: Sequence[DiscOutput],
    cfg: GanConfig
) -> Node:
    """
    Uncertainty-weighted discriminator loss averaged over N sampled discriminators

    With u = 0 and b1 = 1 this is exactly the plain BCE loss.

    Raises:
        ContractError: If either list does not hold n_mc outputs
    """
    _check_sample_count(outputs_real, cfg, "disc_loss_v1")
    _check_sample_count(outputs_fake, cfg, "disc_loss_v1")
    return ops.stack_losses([
        disc_loss_weighted(real, fake, cfg) for real, fake in zip(outputs_real, outputs_fake)
    ])


def gen_loss_v1(fake_outputs: Sequence[DiscOutput], cfg: GanConfig) -> Node:
    """Mean over N sampled discriminators of BCE(D'_n(G(z)), 1)"""
    _check_sample_count(fake_outputs, cfg, "gen_loss_v1")
    return ops.stack_losses([gen_loss_ns(out, cfg) for out in fake_outputs])


def score_set(fake_outputs: Sequence[DiscOutput], cfg: GanConfig) -> Node:
    """[batch x N] matrix of scores, one column per sampled discriminator"""
    return ops.hstack([score(out, cfg) for out in fake_outputs])


def variance_reward(scores: Node, lambda_var: float, b2: float) -> Node:
    """
    lambda * mean over points of var{scores} / (mean{scores}^2 + b2)

    Statistics run across the N discriminator scores of each point (axis 1)
    with the population (divide-by-N) variance.
    """
    spread = ops.population_variance(scores, axis=1)
    centre = ops.mean(scores, axis=1)
    ratio = ops.div(spread, ops.add(ops.square(centre), b2))
    return ops.mul(lambda_var, ops.mean(ratio))


def gen_loss_v2(fake_outputs: Sequence[DiscOutput], cfg: GanConfig) -> Node:
    """
    Generator loss rewarding disagreement between sampled discriminators

    (1/N) sum_n BCE(D'_n(G(z)), 1) - lambda * var{D'_n} / (mu^2{D'_n} + b2)

    Raises:
        ConfigError: If fewer than two discriminator samples are given
        ContractError: If the list does not hold n_mc outputs
    """
    if len(fake_outputs) < 2:
        raise ConfigError("gen_loss_v2 needs at least 2 discriminator samples")
    _check_sample_count(fake_outputs, cfg, "gen_loss_v2")
    scores = score_set(fake_outputs, cfg)
    bce = ops.bce_with_logits(scores, 1.0)
    if cfg.lambda_var == 0:
        return bce
    return ops.sub(bce, variance_reward(scores, cfg.lambda_var, cfg.b2))


# Sliced Wasserstein

def random_projections(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k directions drawn uniformly on the unit sphere in R^d, as a [d x k] matrix"""
    projections = rng.standard_normal((d, k))
    return projections / np.sqrt(np.sum(projections ** 2, axis=0, keepdims=True))


def _unit_projections(projections: np.ndarray) -> np.ndarray:
    global _non_unit_projections
    projections = np.asarray(projections, dtype=np.float64)
    norms = np.sqrt(np.sum(projections ** 2, axis=0, keepdims=True))
    if np.any(np.abs(norms - 1.0) > PROJECTION_NORM_TOL):
        with _projection_lock:
            _non_unit_projections += 1
        logger.warning("Projection columns are not unit-norm; renormalising")
        projections = projections / norms
    return projections


def sliced_w_loss(features_real: Node, features_fake: Node, projections: np.ndarray) -> Node:
    """
    Differentiable sliced Wasserstein distance, normalised by n * k

    Both feature sets are projected on every direction, sorted, and paired
    by order statistic.

    Args:
        features_real: [n x d]
        features_fake: [n x d]
        projections: [d x k] directions

    Returns:
        Scalar node: sum of squared order-statistic gaps / (n * k)

    Raises:
        ContractError: If row counts differ
        DimensionError: If widths do not match the projections
    """
    features_real, features_fake = ops.as_node(features_real), ops.as_node(features_fake)
    if features_real.shape[0] != features_fake.shape[0]:
        raise ContractError(
            f"sliced_w_distance: {features_real.shape[0]} real rows vs "
            f"{features_fake.shape[0]} fake rows"
        )
    projections = _unit_projections(projections)
    if projections.shape[0] != features_real.shape[1] or features_real.shape != features_fake.shape:
        raise DimensionError(
            f"sliced_w_distance: features {features_real.shape}/{features_fake.shape} "
            f"vs projections {projections.shape}"
        )
    omega = Node.constant(projections)
    sorted_real = ops.sort_columns(ops.matmul(features_real, omega))
    sorted_fake = ops.sort_columns(ops.matmul(features_fake, omega))
    return ops.mean(ops.square(ops.sub(sorted_fake, sorted_real)))


def sliced_w_distance(
    features_real: np.ndarray,
    features_fake: np.ndarray,
    projections: np.ndarray
) -> float:
    """Value of sliced_w_loss for plain arrays"""
    return sliced_w_loss(Node.constant(features_real), Node.constant(features_fake),
                         projections).item()


class GanObjective:
    """
    Per-sample loss functions of a variant

    Attributes:
        variant: Variant the losses belong to
        disc_loss: (real, fake, cfg) -> scalar node
        gen_loss: (fake, cfg) -> scalar node; None for sliced variants
    """

    _DISC: Dict[Variant, Callable] = {
        Variant.VANILLA_NS: disc_loss_ns,
        Variant.VANILLA_LS: disc_loss_ls,
        Variant.PRB: disc_loss_ns,
        Variant.PRB_V1: disc_loss_weighted,
        Variant.PRB_V2: disc_loss_weighted,
        Variant.SWGAN: disc_loss_ns,
        Variant.PRB_SWGAN: disc_loss_ns,
    }

    _GEN: Dict[Variant, Optional[Callable]] = {
        Variant.VANILLA_NS: gen_loss_ns,
        Variant.VANILLA_LS: gen_loss_ls,
        Variant.PRB: gen_loss_ns,
        Variant.PRB_V1: gen_loss_ns,
        Variant.PRB_V2: gen_loss_ns,
        Variant.SWGAN: None,
        Variant.PRB_SWGAN: None,
    }

    def __init__(self, variant: Variant):
        self.variant = Variant(variant)
        self.disc_loss = self._DISC[self.variant]
        self.gen_loss = self._GEN[self.variant]

    def __repr__(self) -> str:
        return f"GanObjective({self.variant.value})"
