"""
Feature-vector augmentations

weak:   x * u + eps,              u ~ U(scale_range), eps ~ N(0, sigma^2 I)
strong: weak, then a mask_fraction subset of coordinates set to zero
"""

from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from src.config.settings import AugmentDefaults
from src.utils.errors import ConfigError

AUGMENT_KINDS = ('weak', 'strong')

Seed = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class AugmentSpec:
    kind: str
    jitter_sigma: float
    scale_range: Tuple[float, float]
    mask_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'scale_range', tuple(float(s) for s in self.scale_range))
        if self.kind not in AUGMENT_KINDS:
            raise ConfigError(f"augmentation kind must be one of {AUGMENT_KINDS}, got '{self.kind}'")
        if not self.jitter_sigma >= 0:
            raise ConfigError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")
        lo, hi = self.scale_range
        if lo > hi:
            raise ConfigError(f"scale_range must satisfy lo <= hi, got {self.scale_range}")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise ConfigError(f"mask_fraction must be in [0, 1), got {self.mask_fraction}")
        if self.kind == 'weak' and self.mask_fraction != 0.0:
            raise ConfigError("weak augmentation cannot mask coordinates")

    @classmethod
    def weak(cls) -> 'AugmentSpec':
        return cls('weak', AugmentDefaults.WEAK_JITTER, AugmentDefaults.WEAK_SCALE)

    @classmethod
    def strong(cls) -> 'AugmentSpec':
        return cls('strong', AugmentDefaults.STRONG_JITTER, AugmentDefaults.STRONG_SCALE,
                   AugmentDefaults.STRONG_MASK_FRACTION)

    def masked_count(self, dim: int) -> int:
        return int(np.floor(self.mask_fraction * dim + 0.5)) if self.kind == 'strong' else 0

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'jitter_sigma': self.jitter_sigma,
                'scale_range': list(self.scale_range), 'mask_fraction': self.mask_fraction}


def augment(x: np.ndarray, spec: AugmentSpec, seed: Seed) -> np.ndarray:
    """
    Augment one feature vector

    Args:
        x: feature vector
        spec: augmentation strength
        seed: int or SeedSequence; identical (x, spec, seed) give identical output

    Returns:
        New vector
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    rng = np.random.default_rng(seed)
    lo, hi = spec.scale_range
    out = x * rng.uniform(lo, hi) + rng.normal(0.0, spec.jitter_sigma, size=x.size)
    masked = spec.masked_count(x.size)
    if masked:
        out[rng.choice(x.size, size=masked, replace=False)] = 0.0
    return out


def augment_batch(X: np.ndarray, spec: AugmentSpec, seed: Seed) -> np.ndarray:
    """
    Augment every row of a batch from one generator stream

    Row i gets its own scale, jitter and mask; the whole batch is determined
    by (X, spec, seed).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    rng = np.random.default_rng(seed)
    rows, dim = X.shape
    lo, hi = spec.scale_range
    out = X * rng.uniform(lo, hi, size=(rows, 1)) + rng.normal(0.0, spec.jitter_sigma, size=(rows, dim))
    masked = spec.masked_count(dim)
    if masked:
        # first `masked` positions of an independent random permutation per row
        columns = np.argsort(rng.random((rows, dim)), axis=1)[:, :masked]
        out[np.arange(rows)[:, None], columns] = 0.0
    return out
