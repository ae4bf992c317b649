"""
Configuration package
"""

from .settings import RuntimeConfig, TrainingDefaults, ArchPresets, AugmentDefaults, TheoryDefaults

__all__ = [
    'RuntimeConfig',
    'TrainingDefaults',
    'ArchPresets',
    'AugmentDefaults',
    'TheoryDefaults',
]
