"""
Gradient correctness suite

Checks backward() against central differences for every loss variant on
small random networks with sampled dropout masks.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from pyprbgan.autodiff.gradcheck import check_gradients
from pyprbgan.autodiff.tensor import Node
from pyprbgan.data.synthetic import sample_latent
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.objectives import random_projections
from pyprbgan.gan.trainer import build_disc_loss, build_gen_loss
from pyprbgan.nn.layers import DropoutMaskSet, MlpParams, sample_mask_set, xavier_init

logger = logging.getLogger(__name__)

SUITE_VARIANTS = (
    Variant.VANILLA_NS,
    Variant.PRB,
    Variant.PRB_V1,
    Variant.PRB_V2,
    Variant.SWGAN,
    Variant.PRB_SWGAN,
)


@dataclass
class SuiteResult:
    """
    Outcome of the gradient suite

    Attributes:
        tolerance: Relative error threshold
        worst: Largest relative error per "variant/network" key
        n_checked: Parameter entries compared
        n_skipped: Entries whose +-h step crossed a kink
        failures: Keys whose error reached the tolerance
    """
    tolerance: float
    worst: Dict[str, float] = field(default_factory=dict)
    n_checked: int = 0
    n_skipped: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, key: str, error: float, n_checked: int) -> None:
        self.worst[key] = max(self.worst.get(key, 0.0), error)
        self.n_checked += n_checked
        if error >= self.tolerance and key not in self.failures:
            self.failures.append(key)


def _random_config(variant: Variant, rng: np.random.Generator) -> GanConfig:
    return GanConfig(
        variant=variant,
        p=float(rng.uniform(0.1, 0.5)),
        n_mc=int(rng.integers(2, 4)),
        batch=int(rng.integers(3, 7)),
        latent_dim=int(rng.integers(1, 4)),
        data_dim=int(rng.integers(1, 4)),
        hidden_dim=int(rng.integers(4, 33)),
        n_layers=4,
        b1=float(rng.uniform(0.2, 1.0)),
        b2=float(rng.uniform(0.2, 1.0)),
        lambda_var=float(rng.uniform(0.5, 2.0)),
        n_projections=int(rng.integers(2, 9)),
        m_slice=int(rng.integers(1, 4)),
    )


def _draw_masks(
    params: MlpParams,
    cfg: GanConfig,
    masked: bool,
    n: int,
    rng: np.random.Generator
) -> List[Optional[DropoutMaskSet]]:
    return [sample_mask_set(params.spec, cfg.p, rng) if masked else None for _ in range(n)]


def check_variant(
    variant: Variant,
    rng: np.random.Generator,
    h: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: int = 16
) -> Dict[str, float]:
    """
    Gradient check of one random network pair for one variant

    Draws a configuration, weights, inputs and masks, then checks the
    discriminator loss with respect to discriminator weights and the
    generator loss with respect to generator weights. Entries whose +-h step
    crosses a leaky_relu kink or reorders a sort are skipped.

    Returns:
        {"discriminator": err, "generator": err, "n_checked": count, "n_skipped": count}
    """
    cfg = _random_config(variant, rng)
    gen = xavier_init(cfg.generator_spec(), rng)
    disc = xavier_init(cfg.discriminator_spec(), rng)
    batch_real = rng.normal(size=(cfg.batch, cfg.data_dim))
    z = sample_latent(cfg.latent_dim, cfg.batch, rng)

    n_gen = 1 if cfg.uses_uncertainty or cfg.is_sliced else cfg.n_mc
    n_disc = cfg.m_slice if cfg.is_sliced else cfg.n_mc
    gen_masks = _draw_masks(gen, cfg, cfg.generator_masked, n_gen, rng)
    disc_masks = _draw_masks(disc, cfg, cfg.discriminator_masked, n_disc, rng)
    projections = random_projections(cfg.hidden_dim, cfg.n_projections, rng) if cfg.is_sliced else None

    def disc_loss() -> Node:
        return build_disc_loss(gen, disc, cfg, batch_real, z, gen_masks[0], disc_masks)

    def gen_loss() -> Node:
        return build_gen_loss(gen, disc, cfg, z, gen_masks, disc_masks,
                              batch_real=batch_real, projections=projections)

    d_result = check_gradients(disc_loss, disc.nodes(), h=h, tolerance=tolerance,
                               max_entries=max_entries, rng=rng, skip_kinks=True)
    g_result = check_gradients(gen_loss, gen.nodes(), h=h, tolerance=tolerance,
                               max_entries=max_entries, rng=rng, skip_kinks=True)
    return {
        "discriminator": d_result.max_rel_error,
        "generator": g_result.max_rel_error,
        "n_checked": d_result.n_checked + g_result.n_checked,
        "n_skipped": d_result.n_skipped + g_result.n_skipped,
    }


def run_gradcheck_suite(
    n_nets: int = 20,
    seed: int = 0,
    variants: Sequence[Variant] = SUITE_VARIANTS,
    tolerance: float = 1e-4,
    h: float = 1e-5,
    max_entries: int = 16
) -> SuiteResult:
    """
    Run the gradient check on n_nets random networks for each variant

    Returns:
        SuiteResult with the worst error per variant and network
    """
    rng = np.random.default_rng(seed)
    result = SuiteResult(tolerance=tolerance)
    logger.info(f"Gradient suite: {n_nets} networks x {len(variants)} variants")

    for i in range(n_nets):
        for variant in variants:
            errors = check_variant(Variant(variant), rng, h=h, tolerance=tolerance,
                                   max_entries=max_entries)
            per_net = errors["n_checked"] // 2
            result.record(f"{Variant(variant).value}/discriminator", errors["discriminator"], per_net)
            result.record(f"{Variant(variant).value}/generator", errors["generator"],
                          errors["n_checked"] - per_net)
            result.n_skipped += errors["n_skipped"]

        if (i + 1) % max(1, n_nets // 10) == 0:
            progress = (i + 1) / n_nets * 100
            logger.info(f"Progress: {progress:.0f}% - worst error so far "
                        f"{max(result.worst.values()):.3e}")

    return result
