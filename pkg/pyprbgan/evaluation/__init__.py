"""
Evaluation: histograms, JS divergence and mode coverage
"""

from pyprbgan.evaluation.histogram import (
    Histogram,
    histogram,
    default_range,
    js_divergence,
    sample_jsd,
)
from pyprbgan.evaluation.coverage import ModeReport, ModeCoverageReport, mode_coverage

__all__ = [
    "Histogram",
    "histogram",
    "default_range",
    "js_divergence",
    "sample_jsd",
    "ModeReport",
    "ModeCoverageReport",
    "mode_coverage",
]
