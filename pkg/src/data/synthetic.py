"""
Synthetic Gaussian-blob datasets
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import ConfigError, ShapeError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Features with hidden true labels and observed (possibly noisy) labels

    Attributes:
        features: N x d float64
        true_labels: N ints in [0, K)
        noisy_labels: N ints in [0, K)
        flipped_mask: N bools, True exactly where noisy != true
        num_classes: K
        noise_info: bookkeeping from the last noise injection
    """
    features: np.ndarray
    true_labels: np.ndarray
    noisy_labels: np.ndarray
    flipped_mask: np.ndarray
    num_classes: int
    noise_info: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        true_labels = np.array(self.true_labels, dtype=np.int64).reshape(-1)
        noisy_labels = np.array(self.noisy_labels, dtype=np.int64).reshape(-1)
        flipped = np.array(self.flipped_mask, dtype=bool).reshape(-1)

        if features.ndim != 2:
            raise ShapeError('Dataset', [features.shape], "features must be N x d")
        n = features.shape[0]
        if not (true_labels.size == noisy_labels.size == flipped.size == n):
            raise ShapeError('Dataset', [features.shape, true_labels.shape, noisy_labels.shape, flipped.shape],
                             "label arrays must have one entry per row")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        for name, labels in (('true_labels', true_labels), ('noisy_labels', noisy_labels)):
            if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
                raise ConfigError(f"{name} must lie in [0, {self.num_classes})")
        if not np.array_equal(flipped, noisy_labels != true_labels):
            raise ConfigError("flipped_mask must mark exactly the rows whose noisy label differs from the true label")
        if not np.all(np.isfinite(features)):
            raise ConfigError("features must be finite")

        object.__setattr__(self, 'features', _frozen(features))
        object.__setattr__(self, 'true_labels', _frozen(true_labels))
        object.__setattr__(self, 'noisy_labels', _frozen(noisy_labels))
        object.__setattr__(self, 'flipped_mask', _frozen(flipped))
        object.__setattr__(self, 'num_classes', int(self.num_classes))
        object.__setattr__(self, 'noise_info', dict(self.noise_info))

    @classmethod
    def from_labels(cls, features: np.ndarray, true_labels: Sequence[int], num_classes: int,
                    noisy_labels: Optional[Sequence[int]] = None, noise_info: Optional[Dict] = None) -> 'Dataset':
        true_labels = np.asarray(true_labels, dtype=np.int64)
        noisy = true_labels if noisy_labels is None else np.asarray(noisy_labels, dtype=np.int64)
        return cls(features, true_labels, noisy, noisy != true_labels, num_classes, noise_info or {})

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def flipped_count(self) -> int:
        return int(self.flipped_mask.sum())

    def with_noisy_labels(self, noisy_labels: np.ndarray, noise_info: Optional[Dict] = None) -> 'Dataset':
        return Dataset.from_labels(self.features, self.true_labels, self.num_classes, noisy_labels, noise_info)

    def clean(self) -> 'Dataset':
        """Copy whose observed labels are the true labels"""
        return Dataset.from_labels(self.features, self.true_labels, self.num_classes)

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.true_labels[indices], self.noisy_labels[indices],
                       self.flipped_mask[indices], self.num_classes, self.noise_info)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.num_classes == other.num_classes
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.true_labels, other.true_labels)
                and np.array_equal(self.noisy_labels, other.noisy_labels))


def class_means(num_classes: int, dim: int, rng: np.random.Generator, mean_scale: float = 3.0) -> np.ndarray:
    """
    K class means of norm `mean_scale`

    Orthogonal frame (QR of a Gaussian matrix) when K <= dim, otherwise
    random directions on the sphere.
    """
    if num_classes <= dim:
        frame, _ = np.linalg.qr(rng.normal(size=(dim, num_classes)))
        directions = frame.T
    else:
        directions = rng.normal(size=(num_classes, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return mean_scale * directions


def gen_blobs(num_classes: int, per_class: int, dim: int, spread: float, seed: int,
              mean_scale: float = 3.0) -> Dataset:
    """
    Gaussian clusters around K class means

    Args:
        num_classes: K >= 2
        per_class: points per class (>= 1)
        dim: feature dimension (>= 2)
        spread: per-coordinate standard deviation around the class mean
        seed: generator seed; identical seeds give bitwise-identical datasets
        mean_scale: norm of every class mean

    Returns:
        Dataset with rows shuffled and noisy labels equal to the true labels
    """
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    if per_class < 1:
        raise ConfigError(f"per_class must be >= 1, got {per_class}")
    if dim < 2:
        raise ConfigError(f"dim must be >= 2, got {dim}")
    if not spread >= 0:
        raise ConfigError(f"spread must be >= 0, got {spread}")

    rng = np.random.default_rng(seed)
    means = class_means(num_classes, dim, rng, mean_scale)
    labels = np.repeat(np.arange(num_classes), per_class)
    features = means[labels] + spread * rng.normal(size=(labels.size, dim))
    order = rng.permutation(labels.size)
    return Dataset.from_labels(features[order], labels[order], num_classes,
                               noise_info={'kind': 'none', 'rate': 0.0})


def train_test_split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Random split into (train, test); the test part holds round(fraction * N) rows
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = dataset.size
    n_test = int(np.floor(test_fraction * n + 0.5))
    if n_test < 1 or n_test >= n:
        raise ConfigError(f"test_fraction {test_fraction} leaves an empty split for N={n}")
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))
