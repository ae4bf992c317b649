"""
Configuration management for the CTRR toolkit
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
ENV_PATH = Path(__file__).parent.parent.parent / '.env'
load_dotenv(ENV_PATH)


def _env_flag(name: str, default: str = 'false') -> bool:
    return os.getenv(name, default).strip().lower() in ('1', 'true', 'yes', 'on')


class RuntimeConfig:
    """Process-level settings (logging, parallelism, output locations)"""

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_DIR = Path(__file__).parent.parent.parent / 'logs'
    LOG_TO_FILE = _env_flag('CTRR_LOG_TO_FILE')

    # Caps internal parallelism (Z* enumeration)
    THREADS = max(1, int(os.getenv('CTRR_THREADS', str(os.cpu_count() or 1))))

    # Default location for run artifacts
    RUNS_DIR = Path(os.getenv('CTRR_RUNS_DIR', str(Path(__file__).parent.parent.parent / 'runs')))

    @classmethod
    def ensure_directories(cls):
        """Create necessary directories"""
        cls.LOG_DIR.mkdir(exist_ok=True)
        cls.RUNS_DIR.mkdir(parents=True, exist_ok=True)


class TrainingDefaults:
    """Desk-scale training hyperparameters (SGD recipe of the CIFAR presets)"""

    LEARNING_RATE = 0.02
    MOMENTUM = 0.9
    WEIGHT_DECAY = 5e-4
    BATCH_SIZE = 256
    EPOCHS = 60

    # Regularizer
    LAMBDA = 50.0
    TAU = 0.4
    CLAMP_MARGIN = 1e-4

    # Label correction warm-up
    CORRECTION_START_EPOCH = 10

    # Held-out fraction when a run splits a generated dataset
    TEST_FRACTION = 0.2


class ArchPresets:
    """Layer widths for the encoder/predictor stack"""

    DESK = {
        'backbone_widths': [64, 64],
        'projection_widths': [64, 64, 32],
        'prediction_widths': [16, 32],
    }

    # Full-scale widths (ResNet18 feature size, SimSiam heads)
    FULL = {
        'backbone_widths': [512],
        'projection_widths': [2048, 2048, 2048],
        'prediction_widths': [512, 2048],
    }

    @classmethod
    def get(cls, name: str) -> dict:
        """Return a copy of a named preset"""
        presets = {'desk': cls.DESK, 'full': cls.FULL}
        if name not in presets:
            raise KeyError(f"Unknown architecture preset '{name}'. Available: {sorted(presets)}")
        return {key: list(value) for key, value in presets[name].items()}


class AugmentDefaults:
    """Feature-vector augmentation strengths"""

    WEAK_JITTER = 0.05
    WEAK_SCALE = (0.9, 1.1)
    STRONG_JITTER = 0.3
    STRONG_SCALE = (0.6, 1.4)
    STRONG_MASK_FRACTION = 0.2


class TheoryDefaults:
    """Exact-enumeration limits for the information-theoretic checks"""

    MAX_SUPPORT = 8      # |X|
    MAX_CODOMAIN = 4     # m
    TOLERANCE = 1e-9
