"""
Constructed (ε, γ) family and its exhaustive verification

X = (A, B): A is a noisy copy of the class (A = Y with probability 1 − η,
otherwise uniform over the other classes) and B is a background value drawn
uniformly from {0, ..., M−1} independently of everything else. The observed
label keeps Y when B = 0; for B ≥ 1 it flips with probability ρ to
(Y + 1 + (B − 1) mod (K − 1)) mod K. Positive pairs share Y but redraw A and B,
so ε = I(X;Y|X⁺) stays small while γ = I(X;Ỹ|X⁺) grows with ρ.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import TheoryDefaults
from src.theory.bounds import lemma1_bound, map_classifier, risk_gap, verify_theorem2
from src.theory.joint import DiscreteJoint, epsilon_gamma, representation_joint
from src.theory.search import brute_force_zstar, check_enumeration_guard
from src.utils.errors import ConfigError
from src.utils.logger import setup_logger

logger = setup_logger('theory')

FAMILY_SHAPES: Tuple[Tuple[int, int], ...] = ((2, 2), (2, 3), (2, 4), (3, 2))
FAMILY_ETAS: Tuple[float, ...] = (0.0, 0.01, 0.02, 0.05)
FAMILY_RHOS: Tuple[float, ...] = (0.5, 0.7, 0.9, 1.0)


def epsilon_gamma_family(classes: int, background: int, eta: float, rho: float) -> DiscreteJoint:
    """
    One member of the family; x = a * background + b

    Raises:
        ConfigError: K < 2, M < 1, or η, ρ outside [0, 1]
    """
    if classes < 2:
        raise ConfigError(f"classes must be ≥ 2, got {classes}")
    if background < 1:
        raise ConfigError(f"background must be ≥ 1, got {background}")
    for name, value in (('eta', eta), ('rho', rho)):
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{name} must be in [0, 1], got {value}")

    K, M = classes, background
    a_given_y = np.full((K, K), eta / (K - 1))
    np.fill_diagonal(a_given_y, 1.0 - eta)

    # p(x, y) with x = (a, b)
    p_xy = np.zeros((K * M, K))
    # p(ỹ | x, y)
    channel = np.zeros((K * M, K, K))
    for a in range(K):
        for b in range(M):
            x = a * M + b
            for y in range(K):
                p_xy[x, y] = (1.0 / K) * a_given_y[y, a] * (1.0 / M)
                if b == 0:
                    channel[x, y, y] = 1.0
                else:
                    flipped = (y + 1 + (b - 1) % (K - 1)) % K
                    channel[x, y, y] += 1.0 - rho
                    channel[x, y, flipped] += rho
    return DiscreteJoint.instance_dependent(p_xy, channel)


def uniform_constant_case(num_labels: int = 4) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Uniform Ỹ seen through a constant Z by a constant classifier"""
    return np.full((1, num_labels), 1.0 / num_labels), (0,)


def verify_instance(joint: DiscreteJoint, codomain: int,
                    tolerance: float = TheoryDefaults.TOLERANCE) -> Dict:
    """Entropy sandwich, error bound on (Z*, Ỹ) and risk gap for one distribution"""
    zstar = brute_force_zstar(joint, codomain)
    theorem = verify_theorem2(joint, codomain, tolerance, zstar=zstar)
    z_noisy = representation_joint(joint, zstar.zmap).sum(axis=1)
    lemma1 = lemma1_bound(z_noisy, map_classifier(z_noisy), tolerance)
    risk_z, risk_x = risk_gap(joint, zstar.zmap)
    epsilon = epsilon_gamma(joint).epsilon
    risk_ok = risk_z <= risk_x + epsilon + tolerance
    return {
        'theorem2': theorem.to_dict(),
        'lemma1': lemma1.to_dict(),
        'risk_gap': {'risk_z': risk_z, 'risk_x': risk_x, 'epsilon': epsilon, 'holds': risk_ok},
        'passed': theorem.passed is not False and lemma1.holds and risk_ok,
    }


@dataclass
class FamilyReport:
    instances: List[Dict] = field(default_factory=list)
    lemma1_tight: Optional[Dict] = None

    @property
    def preconditions_met(self) -> int:
        return sum(1 for item in self.instances if item['theorem2']['precondition_met'])

    @property
    def failures(self) -> List[Dict]:
        return [item for item in self.instances if not item['passed']]

    @property
    def passed(self) -> bool:
        tight_ok = self.lemma1_tight is None or self.lemma1_tight['holds']
        return tight_ok and not self.failures

    def to_dict(self) -> Dict:
        return {
            'instances': self.instances,
            'instance_count': len(self.instances),
            'preconditions_met': self.preconditions_met,
            'failure_count': len(self.failures),
            'lemma1_tight': self.lemma1_tight,
            'passed': self.passed,
        }


def verify_family(shapes: Sequence[Tuple[int, int]] = FAMILY_SHAPES,
                  etas: Sequence[float] = FAMILY_ETAS,
                  rhos: Sequence[float] = FAMILY_RHOS,
                  codomain: Optional[int] = None,
                  tolerance: float = TheoryDefaults.TOLERANCE) -> FamilyReport:
    """
    Verify every (K, M, η, ρ) combination plus the tight uniform-label case

    Args:
        shapes: (classes, background) pairs
        codomain: m for the Z* search (default: the class count)

    Raises:
        EnumerationGuardError: some K·M or m exceeds the enumeration limits
    """
    for classes, background in shapes:
        check_enumeration_guard(classes * background, codomain or classes)

    report = FamilyReport()
    for classes, background in shapes:
        m = codomain or classes
        for eta in etas:
            for rho in rhos:
                joint = epsilon_gamma_family(classes, background, eta, rho)
                result = verify_instance(joint, m, tolerance)
                result['params'] = {'classes': classes, 'background': background, 'eta': eta,
                                    'rho': rho, 'codomain': m}
                report.instances.append(result)
                if not result['passed']:
                    logger.warning(f"Verification failed for {result['params']}")

    table, classifier = uniform_constant_case()
    tight = lemma1_bound(table, classifier, tolerance)
    report.lemma1_tight = {**tight.to_dict(), 'tight': math.isclose(tight.error, tight.bound, abs_tol=tolerance)}
    logger.info(f"✓ Verified {len(report.instances)} distributions "
                f"({report.preconditions_met} with γ > ε, {len(report.failures)} failures)")
    return report
