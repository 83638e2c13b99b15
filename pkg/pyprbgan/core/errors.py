"""
Exception hierarchy for PyPrbGAN

Library code raises these; only the command line maps them to exit codes.
"""

from typing import Optional


class PrbGanError(Exception):
    """Base class for all PyPrbGAN errors"""
    pass


class DimensionError(PrbGanError, ValueError):
    """Raised when tensor shapes do not agree"""
    pass


class DomainError(PrbGanError, ValueError):
    """Raised when a value lies outside an operation's domain"""
    pass


class ContractError(PrbGanError, ValueError):
    """Raised when a caller breaks an operation's precondition"""
    pass


class ConfigError(PrbGanError, ValueError):
    """
    Raised when a configuration is invalid

    Attributes:
        line: 1-based line in the source file, if known
    """

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(PrbGanError, ArithmeticError):
    """
    Raised when a computation produces a non-finite value or hits a numeric guard

    Attributes:
        sample_index: MC sample index being processed, if known
    """

    def __init__(self, message: str, sample_index: Optional[int] = None):
        self.sample_index = sample_index
        if sample_index is not None:
            message = f"{message} (MC sample {sample_index})"
        super().__init__(message)
