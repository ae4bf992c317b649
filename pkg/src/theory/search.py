"""
Exhaustive search for Z* = argmax over deterministic maps of I(Z; X⁺)

Maps are enumerated in lexicographic order of their value tables. The map
space is cut into contiguous chunks that are scored in a thread pool; a later
map replaces the running best only when it is better by more than
TIE_TOLERANCE, so the earliest maximiser wins regardless of scheduling.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.config.settings import RuntimeConfig, TheoryDefaults
from src.theory.joint import DiscreteJoint, RepresentationMap, positive_pair_joint
from src.theory.measures import mutual_info
from src.utils.errors import ConfigError, EnumerationGuardError
from src.utils.logger import setup_logger

logger = setup_logger('theory')

TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ZStarResult:
    zmap: RepresentationMap
    value: float
    maps_evaluated: int

    def to_dict(self) -> Dict:
        return {'map': self.zmap.to_dict(), 'i_z_x_pos': self.value, 'maps_evaluated': self.maps_evaluated}


def check_enumeration_guard(support: int, codomain: int,
                            max_support: int = TheoryDefaults.MAX_SUPPORT,
                            max_codomain: int = TheoryDefaults.MAX_CODOMAIN):
    if codomain < 1:
        raise ConfigError(f"codomain size must be ≥ 1, got {codomain}")
    if support > max_support:
        raise EnumerationGuardError(f"|X|={support} exceeds the enumeration limit {max_support}")
    if codomain > max_codomain:
        raise EnumerationGuardError(f"m={codomain} exceeds the enumeration limit {max_codomain}")


def _map_value(pair: np.ndarray, table: Tuple[int, ...], codomain: int) -> float:
    z_pair = np.zeros((codomain, pair.shape[1]))
    np.add.at(z_pair, np.asarray(table), pair)
    return mutual_info(z_pair, (0,), (1,))


def _scan(pair: np.ndarray, support: int, codomain: int, start: int, stop: int) -> Tuple[float, int]:
    """Best (value, index) over maps [start, stop) of the lexicographic order"""
    best_value, best_index = -np.inf, -1
    maps = itertools.islice(itertools.product(range(codomain), repeat=support), start, stop)
    for index, table in enumerate(maps, start=start):
        value = _map_value(pair, table, codomain)
        if value > best_value + TIE_TOLERANCE:
            best_value, best_index = value, index
    return best_value, best_index


def _nth_map(index: int, support: int, codomain: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(support):
        index, digit = divmod(index, codomain)
        digits.append(digit)
    return tuple(reversed(digits))


def brute_force_zstar(joint: DiscreteJoint, codomain: int,
                      threads: Optional[int] = None) -> ZStarResult:
    """
    Maximise I(Z; X⁺) over every map X → {0, ..., m−1}

    Args:
        joint: distribution of (X, Y, Ỹ)
        codomain: m
        threads: worker count (default RuntimeConfig.THREADS)

    Returns:
        ZStarResult with the lexicographically first maximiser

    Raises:
        EnumerationGuardError: |X| or m above the enumeration limits
    """
    support = joint.support_x
    check_enumeration_guard(support, codomain)
    pair = positive_pair_joint(joint)
    total = codomain ** support
    workers = max(1, min(threads or RuntimeConfig.THREADS, total))
    bounds = np.linspace(0, total, workers + 1).astype(int)

    logger.debug(f"Enumerating {total} maps (|X|={support}, m={codomain}) on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_scan, pair, support, codomain, int(lo), int(hi))
                   for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        chunks = [future.result() for future in futures]

    best_value, best_index = -np.inf, -1
    for value, index in chunks:
        if value > best_value + TIE_TOLERANCE:
            best_value, best_index = value, index

    zmap = RepresentationMap(_nth_map(best_index, support, codomain), codomain)
    return ZStarResult(zmap, float(best_value), total)
