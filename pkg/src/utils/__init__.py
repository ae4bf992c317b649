"""
Shared utilities
"""

from .errors import (
    CTRRError,
    ShapeError,
    NumericError,
    ConfigError,
    EnumerationGuardError,
    DatasetFormatError,
    TrainingDivergedError,
)
from .logger import setup_logger

__all__ = [
    'CTRRError',
    'ShapeError',
    'NumericError',
    'ConfigError',
    'EnumerationGuardError',
    'DatasetFormatError',
    'TrainingDivergedError',
    'setup_logger',
]
