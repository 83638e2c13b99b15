"""
Probabilistic GAN: configuration, objectives and training steps
"""

from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.networks import DiscOutput, discriminate, generate_batch
from pyprbgan.gan.objectives import (
    GanObjective,
    weighted_logit,
    disc_loss_v1,
    gen_loss_v1,
    gen_loss_v2,
    score_set,
    variance_reward,
    random_projections,
    sliced_w_loss,
    sliced_w_distance,
)
from pyprbgan.gan.trainer import (
    GanTrainer,
    RngStreams,
    StepReport,
    disc_step,
    gen_step,
    prb_sliced_w_distance,
    generate,
    generate_instances,
)

__all__ = [
    "GanConfig",
    "Variant",
    "DiscOutput",
    "discriminate",
    "generate_batch",
    "GanObjective",
    "weighted_logit",
    "disc_loss_v1",
    "gen_loss_v1",
    "gen_loss_v2",
    "score_set",
    "variance_reward",
    "random_projections",
    "sliced_w_loss",
    "sliced_w_distance",
    "GanTrainer",
    "RngStreams",
    "StepReport",
    "disc_step",
    "gen_step",
    "prb_sliced_w_distance",
    "generate",
    "generate_instances",
]
