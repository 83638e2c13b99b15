"""
Core modules for PyPrbGAN
"""

from pyprbgan.core.errors import (
    PrbGanError,
    DimensionError,
    DomainError,
    ContractError,
    ConfigError,
    NumericError,
)
from pyprbgan.core.config import (
    Settings,
    ScheduleConfig,
    RunConfig,
    ExperimentConfig,
    get_settings,
    set_settings,
    reset_settings,
)
from pyprbgan.core.parallel_engine import ParallelSeedRunner
from pyprbgan.core.experiment import preset_paper_1d, run, run_seed, summarize

__all__ = [
    "PrbGanError",
    "DimensionError",
    "DomainError",
    "ContractError",
    "ConfigError",
    "NumericError",
    "Settings",
    "ScheduleConfig",
    "RunConfig",
    "ExperimentConfig",
    "get_settings",
    "set_settings",
    "reset_settings",
    "ParallelSeedRunner",
    "preset_paper_1d",
    "run",
    "run_seed",
    "summarize",
]
