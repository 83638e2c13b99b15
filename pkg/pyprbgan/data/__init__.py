"""
Synthetic data for PyPrbGAN
"""

from pyprbgan.data.synthetic import (
    LatentPrior,
    MixtureComponent,
    MixtureSpec,
    MixtureDataset,
    paper_mixture,
    grid_mixture,
    sample,
    sample_latent,
)

__all__ = [
    "LatentPrior",
    "MixtureComponent",
    "MixtureSpec",
    "MixtureDataset",
    "paper_mixture",
    "grid_mixture",
    "sample",
    "sample_latent",
]
