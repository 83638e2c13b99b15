"""
Histograms and Jensen-Shannon divergence between them
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
from scipy.special import rel_entr

from pyprbgan.core.errors import ContractError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 100
DEFAULT_MARGIN = 5.0


@dataclass
class Histogram:
    """
    Equal-width histogram of 1-D samples

    Bins are half-open [lo, hi) except the last, which is closed.

    Attributes:
        edges: Strictly increasing bin boundaries (bins + 1 entries)
        counts: Samples per bin
        total: Number of samples binned, including out-of-range ones
    """
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def bins(self) -> int:
        return len(self.counts)

    @property
    def out_of_range(self) -> int:
        return int(self.total - self.counts.sum())

    def normalized(self) -> np.ndarray:
        """In-range counts scaled to sum to 1"""
        in_range = self.counts.sum()
        if in_range == 0:
            return np.zeros(self.bins)
        return self.counts / in_range

    def mass(self) -> np.ndarray:
        """Per-bin fractions of all samples, out-of-range mass appended as a last entry"""
        if self.total == 0:
            return np.zeros(self.bins + 1)
        return np.append(self.counts, self.out_of_range) / self.total


def histogram(
    samples: np.ndarray,
    bins: int = DEFAULT_BINS,
    value_range: Optional[Tuple[float, float]] = None
) -> Histogram:
    """
    Bin 1-D samples into equal-width bins

    Args:
        samples: Samples (flattened; [n x 1] accepted)
        bins: Number of bins (>= 1)
        value_range: (lo, hi) with lo < hi; defaults to the sample extent

    Returns:
        Histogram; samples outside value_range count as out-of-range mass

    Raises:
        ContractError: On empty samples, bins < 1 or an empty range
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise ContractError("Cannot build a histogram of an empty sample set")
    if bins < 1:
        raise ContractError(f"bins must be at least 1, got {bins}")
    if value_range is None:
        value_range = (float(samples.min()), float(samples.max()))
    lo, hi = value_range
    if not lo < hi:
        raise ContractError(f"Histogram range must satisfy lo < hi, got ({lo}, {hi})")

    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    return Histogram(edges=edges, counts=counts.astype(np.int64), total=int(samples.size))


def default_range(real: np.ndarray, margin: float = DEFAULT_MARGIN) -> Tuple[float, float]:
    """[min(real) - margin, max(real) + margin]"""
    real = np.asarray(real, dtype=np.float64).reshape(-1)
    return float(real.min()) - margin, float(real.max()) + margin


def js_divergence(h1: Histogram, h2: Histogram) -> float:
    """
    Jensen-Shannon divergence of two histograms

    Out-of-range samples form one extra bin, so mass a generator puts
    outside the range counts against it. Natural log, so the result lies in
    [0, ln 2]; 0 * log 0 is taken as 0.

    Raises:
        ContractError: If the histograms do not share edges
    """
    if h1.edges.shape != h2.edges.shape or not np.array_equal(h1.edges, h2.edges):
        raise ContractError("js_divergence needs histograms with identical edges")
    p, q = h1.mass(), h2.mass()
    m = 0.5 * (p + q)
    value = 0.5 * float(np.sum(rel_entr(p, m))) + 0.5 * float(np.sum(rel_entr(q, m)))
    return min(max(value, 0.0), float(np.log(2.0)))


def sample_jsd(
    real: np.ndarray,
    fake: np.ndarray,
    bins: int = DEFAULT_BINS,
    value_range: Optional[Tuple[float, float]] = None
) -> float:
    """JSD between real and generated samples on shared bins (default range from real)"""
    if value_range is None:
        value_range = default_range(real)
    return js_divergence(histogram(real, bins, value_range), histogram(fake, bins, value_range))
