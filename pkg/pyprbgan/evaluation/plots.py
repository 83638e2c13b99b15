"""
Real-vs-generated histogram figure
"""

from pathlib import Path
from typing import Optional, Tuple
import logging

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from pyprbgan.evaluation.histogram import DEFAULT_BINS, default_range, histogram  # noqa: E402

logger = logging.getLogger(__name__)


def plot_histograms(
    real: np.ndarray,
    fake: np.ndarray,
    path: Path,
    bins: int = DEFAULT_BINS,
    value_range: Optional[Tuple[float, float]] = None,
    title: str = "Real vs generated data"
) -> Path:
    """
    Overlay histograms of real and generated 1-D samples and save the figure

    Args:
        real: Real samples
        fake: Generated samples
        path: Output image path (format from suffix)
        bins: Number of bins
        value_range: Shared range; defaults to the real extent +/- 5

    Returns:
        Path written
    """
    if value_range is None:
        value_range = default_range(real)
    h_real = histogram(real, bins, value_range)
    h_fake = histogram(fake, bins, value_range)
    centers = 0.5 * (h_real.edges[:-1] + h_real.edges[1:])
    width = h_real.edges[1] - h_real.edges[0]

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(centers, h_real.normalized(), width=width, alpha=0.5, label="Real data")
    ax.bar(centers, h_fake.normalized(), width=width, alpha=0.5, label="Generated data")
    ax.set_xlabel("Data values")
    ax.set_ylabel("Fraction of samples")
    ax.set_title(title)
    ax.legend()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Saved histogram figure to {path}")
    return path
