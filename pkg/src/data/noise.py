"""
Label-noise injection

Every injector selects exactly round(r * N) rows without replacement and
rewrites their labels starting from the true labels, so injections do not
stack. The generator is seeded once per call; selection is drawn first,
replacement labels second.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from src.data.synthetic import Dataset
from src.utils.errors import ConfigError

NOISE_KINDS = ('symmetric', 'asymmetric_pairs', 'next_class')

# CIFAR-10 class indices: TRUCK->AUTOMOBILE, BIRD->AIRPLANE, DEER->HORSE, CAT<->DOG
CIFAR10_PAIR_MAP = {9: 1, 2: 0, 4: 7, 3: 5, 5: 3}


def _normalize_map(class_map: Mapping) -> Dict[int, int]:
    return {int(k): int(v) for k, v in class_map.items()}


def validate_rate(rate: float):
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"noise rate must be in [0, 1], got {rate}")


def validate_class_map(class_map: Mapping, num_classes: Optional[int] = None) -> Dict[int, int]:
    """
    Raises:
        ConfigError: self-loop or class outside [0, K)
    """
    normalized = _normalize_map(class_map)
    for source, target in normalized.items():
        if source == target:
            raise ConfigError(f"class map has a self-loop at class {source}")
        if num_classes is not None and not (0 <= source < num_classes and 0 <= target < num_classes):
            raise ConfigError(f"class map entry {source}->{target} is outside [0, {num_classes})")
    return normalized


@dataclass(frozen=True)
class NoiseSpec:
    """
    Attributes:
        kind: 'symmetric', 'asymmetric_pairs' or 'next_class'
        rate: fraction r of rows selected
        seed: generator seed
        class_map: source -> target classes (asymmetric_pairs only)
    """
    kind: str
    rate: float
    seed: int = 0
    class_map: Optional[Mapping[int, int]] = field(default=None)

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"noise kind must be one of {NOISE_KINDS}, got '{self.kind}'")
        validate_rate(self.rate)
        if self.kind == 'asymmetric_pairs':
            object.__setattr__(self, 'class_map', validate_class_map(
                CIFAR10_PAIR_MAP if self.class_map is None else self.class_map))
        elif self.class_map is not None:
            raise ConfigError(f"class_map only applies to asymmetric_pairs noise, not '{self.kind}'")

    def to_dict(self) -> Dict:
        document = {'kind': self.kind, 'rate': self.rate, 'seed': self.seed}
        if self.class_map is not None:
            document['class_map'] = {str(k): v for k, v in sorted(self.class_map.items())}
        return document

    @classmethod
    def from_dict(cls, document: Mapping) -> 'NoiseSpec':
        allowed = {'kind', 'rate', 'seed', 'class_map'}
        unknown = set(document) - allowed
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        if 'kind' not in document or 'rate' not in document:
            raise ConfigError("noise config needs 'kind' and 'rate'")
        return cls(kind=document['kind'], rate=float(document['rate']), seed=int(document.get('seed', 0)),
                   class_map=document.get('class_map'))


def selection_count(n: int, rate: float) -> int:
    """round(rate * n), halves rounded up"""
    return int(np.floor(rate * n + 0.5))


def _select(n: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    validate_rate(rate)
    return np.sort(rng.choice(n, size=selection_count(n, rate), replace=False))


def _result(ds: Dataset, noisy: np.ndarray, info: Dict) -> Dataset:
    info['changed'] = int(np.sum(noisy != ds.true_labels))
    return ds.with_noisy_labels(noisy, info)


def inject_symmetric(ds: Dataset, rate: float, seed: int) -> Dataset:
    """
    Replace each selected label by a uniform draw over the K - 1 other classes
    """
    rng = np.random.default_rng(seed)
    selected = _select(ds.size, rate, rng)
    noisy = ds.true_labels.copy()
    offsets = rng.integers(1, ds.num_classes, size=selected.size)
    noisy[selected] = (noisy[selected] + offsets) % ds.num_classes
    info = {'kind': 'symmetric', 'rate': rate, 'seed': seed, 'selected': int(selected.size)}
    return _result(ds, noisy, info)


def inject_asymmetric_pairs(ds: Dataset, rate: float, class_map: Mapping[int, int], seed: int) -> Dataset:
    """
    Map each selected label through class_map; labels outside the map stay

    Selection runs over all rows, so unmappable selections still count as
    selected. Both counts are recorded in noise_info.
    """
    class_map = validate_class_map(class_map, ds.num_classes)
    rng = np.random.default_rng(seed)
    selected = _select(ds.size, rate, rng)
    noisy = ds.true_labels.copy()
    for index in selected:
        noisy[index] = class_map.get(int(noisy[index]), noisy[index])
    info = {
        'kind': 'asymmetric_pairs',
        'rate': rate,
        'seed': seed,
        'selected': int(selected.size),
        'class_map': {str(k): v for k, v in sorted(class_map.items())},
    }
    return _result(ds, noisy, info)


def inject_next_class(ds: Dataset, rate: float, seed: int) -> Dataset:
    """Selected labels y -> (y + 1) mod K"""
    rng = np.random.default_rng(seed)
    selected = _select(ds.size, rate, rng)
    noisy = ds.true_labels.copy()
    noisy[selected] = (noisy[selected] + 1) % ds.num_classes
    info = {'kind': 'next_class', 'rate': rate, 'seed': seed, 'selected': int(selected.size)}
    return _result(ds, noisy, info)


def inject(ds: Dataset, spec: NoiseSpec) -> Dataset:
    """Apply a NoiseSpec"""
    if spec.kind == 'symmetric':
        return inject_symmetric(ds, spec.rate, spec.seed)
    if spec.kind == 'next_class':
        return inject_next_class(ds, spec.rate, spec.seed)
    return inject_asymmetric_pairs(ds, spec.rate, spec.class_map, spec.seed)
