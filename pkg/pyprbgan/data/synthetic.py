"""
Synthetic datasets

Gaussian mixtures used for mode-coverage experiments and the latent prior
fed to the generator.

- paper_mixture: five 1-D components at [10, 20, 60, 80, 110]
- grid_mixture: 2-D grid of tight components for coverage stress tests
"""

from enum import Enum
from typing import List, Optional, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class LatentPrior(str, Enum):
    """Latent noise distributions"""
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


class MixtureComponent(BaseModel):
    """
    One Gaussian component with diagonal covariance

    Attributes:
        mean: Component mean, one entry per dimension
        std: Per-dimension standard deviation (> 0)
        weight: Unnormalised mixing weight (> 0)
    """
    mean: List[float]
    std: List[float]
    weight: float = Field(default=1.0, gt=0.0)

    @field_validator("std")
    @classmethod
    def validate_std(cls, v: List[float]) -> List[float]:
        """Validate standard deviations are positive"""
        if any(s <= 0 for s in v):
            raise ValueError(f"std entries must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_dims(self) -> "MixtureComponent":
        """Validate mean and std have equal length"""
        if len(self.mean) != len(self.std) or not self.mean:
            raise ValueError(
                f"mean ({len(self.mean)}) and std ({len(self.std)}) must have equal, non-zero length"
            )
        return self


class MixtureSpec(BaseModel):
    """
    Gaussian mixture distribution

    Attributes:
        components: Mixture components (all of one dimension)
    """
    components: List[MixtureComponent] = Field(min_length=1)

    @model_validator(mode="after")
    def validate_components(self) -> "MixtureSpec":
        """Validate every component has the same dimension"""
        dims = {len(c.mean) for c in self.components}
        if len(dims) != 1:
            raise ValueError(f"All components must share one dimension, got {sorted(dims)}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.components[0].mean)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        """Mixing weights normalised to sum to 1"""
        w = np.array([c.weight for c in self.components], dtype=np.float64)
        return w / w.sum()

    @property
    def means(self) -> np.ndarray:
        """[components x dim] array of means"""
        return np.array([c.mean for c in self.components], dtype=np.float64)

    @property
    def stds(self) -> np.ndarray:
        """[components x dim] array of standard deviations"""
        return np.array([c.std for c in self.components], dtype=np.float64)

    def moments(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Analytic per-dimension mean and standard deviation of the mixture

        Returns:
            Tuple of (mean, std), each of length dimension
        """
        w = self.weights[:, None]
        mean = (w * self.means).sum(axis=0)
        second = (w * (self.stds ** 2 + self.means ** 2)).sum(axis=0)
        return mean, np.sqrt(second - mean ** 2)

    @classmethod
    def from_arrays(
        cls,
        means: Union[List[float], List[List[float]]],
        stds: Union[List[float], List[List[float]]],
        weights: Optional[List[float]] = None
    ) -> "MixtureSpec":
        """Build a mixture from parallel lists (scalars are treated as 1-D)"""
        means_arr = [m if isinstance(m, (list, tuple)) else [m] for m in means]
        stds_arr = [s if isinstance(s, (list, tuple)) else [s] for s in stds]
        if len(means_arr) != len(stds_arr):
            raise ValueError(f"{len(means_arr)} means but {len(stds_arr)} stds")
        if weights is None:
            weights = [1.0] * len(means_arr)
        if len(weights) != len(means_arr):
            raise ValueError(f"{len(means_arr)} means but {len(weights)} weights")
        return cls(components=[
            MixtureComponent(mean=list(m), std=list(s), weight=w)
            for m, s, w in zip(means_arr, stds_arr, weights)
        ])


def paper_mixture() -> MixtureSpec:
    """Five equal-weight 1-D components: means [10, 20, 60, 80, 110], stds [3, 3, 2, 2, 1]"""
    return MixtureSpec.from_arrays(
        means=[10.0, 20.0, 60.0, 80.0, 110.0],
        stds=[3.0, 3.0, 2.0, 2.0, 1.0],
    )


def grid_mixture(size: int = 5, spacing: float = 2.0, std: float = 0.05) -> MixtureSpec:
    """Equal-weight 2-D components on a size x size integer grid scaled by spacing"""
    means = [[spacing * i, spacing * j] for i in range(size) for j in range(size)]
    return MixtureSpec.from_arrays(means=means, stds=[[std, std]] * len(means))


def sample(
    spec: MixtureSpec,
    n: int,
    rng: np.random.Generator,
    return_labels: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    Draw n points from the mixture

    A component is chosen by weight, then a Gaussian draw is made from it.

    Args:
        spec: Mixture
        n: Number of points (>= 1)
        rng: Generator
        return_labels: Also return the component index of each point

    Returns:
        [n x dim] array, or (samples, labels)
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")

    labels = rng.choice(spec.n_components, size=n, p=spec.weights)
    noise = rng.standard_normal((n, spec.dimension))
    samples = spec.means[labels] + spec.stds[labels] * noise

    if return_labels:
        return samples, labels
    return samples


def sample_latent(
    dim: int,
    n: int,
    rng: np.random.Generator,
    prior: LatentPrior = LatentPrior.UNIFORM
) -> np.ndarray:
    """
    Draw an [n x dim] latent batch

    Args:
        dim: Latent dimension (>= 1)
        n: Batch size
        rng: Generator
        prior: uniform(-1, 1) (default) or standard normal

    Returns:
        [n x dim] array
    """
    if dim < 1:
        raise ValueError(f"Latent dimension must be at least 1, got {dim}")
    if LatentPrior(prior) == LatentPrior.GAUSSIAN:
        return rng.standard_normal((n, dim))
    return rng.uniform(-1.0, 1.0, size=(n, dim))


class MixtureDataset:
    """
    Batch source over a mixture

    With a finite size, a pool of points is drawn once and served in shuffled
    epochs; with size=None every batch is a fresh draw.

    Attributes:
        spec: Mixture
        size: Pool size (None = unlimited)
        samples_seen: Number of points served so far
    """

    def __init__(self, spec: MixtureSpec, size: Optional[int], rng: np.random.Generator):
        self.spec = spec
        self.size = size
        self.rng = rng
        self.samples_seen = 0
        self._pool: Optional[np.ndarray] = None
        self._order: Optional[np.ndarray] = None
        self._cursor = 0

        if size is not None:
            if size < 1:
                raise ValueError(f"Dataset size must be at least 1, got {size}")
            self._pool = sample(spec, size, rng)
            logger.info(f"Sampled dataset of {size} points from {spec.n_components}-component mixture")

    @property
    def epoch(self) -> float:
        """Fractional number of passes over the pool (0 for unlimited data)"""
        if self.size is None:
            return 0.0
        return self.samples_seen / self.size

    def next_batch(self, batch_size: int) -> np.ndarray:
        """Return the next [batch_size x dim] batch"""
        self.samples_seen += batch_size
        if self._pool is None:
            return sample(self.spec, batch_size, self.rng)

        rows = []
        needed = batch_size
        while needed > 0:
            if self._order is None or self._cursor >= len(self._order):
                self._order = self.rng.permutation(self.size)
                self._cursor = 0
            take = min(needed, len(self._order) - self._cursor)
            rows.append(self._order[self._cursor:self._cursor + take])
            self._cursor += take
            needed -= take
        return self._pool[np.concatenate(rows)]

    def __repr__(self) -> str:
        return f"MixtureDataset(components={self.spec.n_components}, size={self.size})"
