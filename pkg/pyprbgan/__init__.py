"""
PyPrbGAN - Probabilistic GANs with MC dropout

Generators and discriminators are treated as distributions over networks:
every training step samples networks with Bernoulli dropout masks and
averages their gradients. Includes uncertainty-weighted discriminators,
a score-set variance reward, sliced Wasserstein variants and a
Gaussian-mixture mode-coverage harness.
"""

__version__ = "0.1.0"
__author__ = "PyPrbGAN Development Team"
__license__ = "MIT"

from pyprbgan.core.config import ExperimentConfig
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.trainer import GanTrainer

__all__ = ["ExperimentConfig", "GanConfig", "Variant", "GanTrainer", "__version__"]
