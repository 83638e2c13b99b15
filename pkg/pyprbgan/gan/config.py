"""
GAN hyperparameters

GanConfig carries everything a training step needs. The learning rate
lives in optimizer.learning_rate; lambda_var only weights the variance reward.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from pyprbgan.data.synthetic import LatentPrior
from pyprbgan.nn.layers import LayerSpec, mlp_spec
from pyprbgan.nn.optim import OptimizerConfig


class Variant(str, Enum):
    """Training objectives"""
    VANILLA_NS = "vanilla_ns"
    VANILLA_LS = "vanilla_ls"
    PRB = "prb"
    PRB_V1 = "prb_v1"
    PRB_V2 = "prb_v2"
    SWGAN = "swgan"
    PRB_SWGAN = "prb_swgan"


# Which networks carry dropout masks when not overridden: (generator, discriminator)
_DEFAULT_MASKING = {
    Variant.VANILLA_NS: (False, False),
    Variant.VANILLA_LS: (False, False),
    Variant.PRB: (True, True),
    Variant.PRB_V1: (False, True),
    Variant.PRB_V2: (False, True),
    Variant.SWGAN: (False, False),
    Variant.PRB_SWGAN: (False, True),
}


class GanConfig(BaseModel):
    """
    Hyperparameters of one GAN training run

    Attributes:
        variant: Objective family
        p: Drop probability of every maskable unit
        layer_drop_probs: Optional per-maskable-layer override of p
        n_mc: MC samples N per training step
        batch: Batch size B
        latent_dim: Generator input width
        latent_prior: uniform(-1, 1) or gaussian
        data_dim: Data dimension
        hidden_dim: Hidden layer width of both networks
        n_layers: Fully connected layers per network
        leaky_slope: Negative slope of hidden activations
        b1: Bias of the uncertainty-weighted logit
        b2: Bias of the variance-reward denominator
        lambda_var: Weight of the variance reward. The reward uses the
            uncertainty-weighted score when the discriminator has an
            uncertainty head (prb_v2) and the raw logit otherwise.
        n_projections: Projection directions for sliced variants
        m_slice: Discriminator mask samples M for prb_swgan
        mask_generator: Override of generator masking (None = variant default)
        mask_discriminator: Override of discriminator masking (None = variant default)
        optimizer: Optimizer settings shared by both networks
        seed: Seed of the run
    """
    variant: Variant = Variant.PRB
    p: float = Field(default=0.4, ge=0.0, lt=1.0)
    layer_drop_probs: Optional[List[float]] = None
    n_mc: int = Field(default=20, ge=1)
    batch: int = Field(default=64, ge=1)
    latent_dim: int = Field(default=1, ge=1)
    latent_prior: LatentPrior = LatentPrior.UNIFORM
    data_dim: int = Field(default=1, ge=1)
    hidden_dim: int = Field(default=600, ge=1)
    n_layers: int = Field(default=4, ge=2)
    leaky_slope: float = Field(default=0.2, gt=0.0, lt=1.0)
    b1: float = Field(default=0.3, gt=0.0)
    b2: float = Field(default=0.3, gt=0.0)
    lambda_var: float = Field(default=1.0, ge=0.0)
    n_projections: int = Field(default=50, ge=1)
    m_slice: int = Field(default=8, ge=1)
    mask_generator: Optional[bool] = None
    mask_discriminator: Optional[bool] = None
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    seed: int = 0

    model_config = ConfigDict(use_enum_values=False)

    @model_validator(mode="after")
    def validate_variant(self) -> "GanConfig":
        """Validate combinations that depend on the variant"""
        if self.variant == Variant.PRB_V2 and self.n_mc < 2:
            raise ValueError("prb_v2 needs n_mc >= 2: the variance of one score is meaningless")
        if self.layer_drop_probs is not None:
            if len(self.layer_drop_probs) != self.n_layers - 1:
                raise ValueError(
                    f"layer_drop_probs needs {self.n_layers - 1} entries, "
                    f"got {len(self.layer_drop_probs)}"
                )
            if any(not 0.0 <= q < 1.0 for q in self.layer_drop_probs):
                raise ValueError(f"layer_drop_probs must lie in [0, 1), got {self.layer_drop_probs}")
        return self

    @property
    def generator_masked(self) -> bool:
        if self.mask_generator is not None:
            return self.mask_generator
        return _DEFAULT_MASKING[self.variant][0]

    @property
    def discriminator_masked(self) -> bool:
        if self.mask_discriminator is not None:
            return self.mask_discriminator
        return _DEFAULT_MASKING[self.variant][1]

    @property
    def uses_uncertainty(self) -> bool:
        return self.variant in (Variant.PRB_V1, Variant.PRB_V2)

    @property
    def is_sliced(self) -> bool:
        return self.variant in (Variant.SWGAN, Variant.PRB_SWGAN)

    @property
    def is_least_squares(self) -> bool:
        return self.variant == Variant.VANILLA_LS

    def generator_spec(self) -> List[LayerSpec]:
        return mlp_spec(self.latent_dim, self.hidden_dim, self.data_dim,
                        n_layers=self.n_layers, slope=self.leaky_slope)

    def discriminator_spec(self) -> List[LayerSpec]:
        # second output column is the raw uncertainty head
        out_dim = 2 if self.uses_uncertainty else 1
        return mlp_spec(self.data_dim, self.hidden_dim, out_dim,
                        n_layers=self.n_layers, slope=self.leaky_slope)
