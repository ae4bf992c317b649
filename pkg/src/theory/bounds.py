"""
Exact checks of the representation bounds

    sandwich     I(X;Y) − ε ≤ I(Z*;Y) ≤ I(X;Y)
    noisy upper  I(Z*;Ỹ) ≤ I(X;Ỹ) − γ + ε
    error bound  E[1{Ŷ ≠ Ỹ}] ≥ (H(Ỹ) − I(Z;Ỹ) − H(ẽ)) / log(|Y| − 1)
    risk gap     H(Y|Z*) ≤ H(Y|X) + ε
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import TheoryDefaults
from src.theory.joint import DiscreteJoint, RepresentationMap, epsilon_gamma, label_info, representation_info
from src.theory.measures import binary_entropy, conditional_entropy, entropy, mutual_info, validate_table
from src.theory.search import ZStarResult, brute_force_zstar
from src.utils.errors import ConfigError


@dataclass(frozen=True)
class Theorem2Report:
    epsilon: float
    gamma: float
    precondition_met: bool
    i_x_y: float
    i_x_y_noisy: float
    i_z_y: float
    i_z_y_noisy: float
    zstar: Dict
    lower_ok: Optional[bool] = None
    upper_ok: Optional[bool] = None
    noisy_ok: Optional[bool] = None

    @property
    def passed(self) -> Optional[bool]:
        """None when γ ≤ ε (no claim is made)"""
        if not self.precondition_met:
            return None
        return bool(self.lower_ok and self.upper_ok and self.noisy_ok)

    def to_dict(self) -> Dict:
        document = asdict(self)
        document['passed'] = self.passed
        return document


def verify_theorem2(joint: DiscreteJoint, codomain: int,
                    tolerance: float = TheoryDefaults.TOLERANCE,
                    zstar: Optional[ZStarResult] = None) -> Theorem2Report:
    """
    Evaluate both sides of the sandwich and noisy-label bounds for Z*

    The inequalities are only checked when γ > ε; otherwise the report
    carries the computed values with the checks left unset.
    """
    eg = epsilon_gamma(joint)
    zstar = zstar or brute_force_zstar(joint, codomain)
    x_info = label_info(joint)
    z_info = representation_info(joint, zstar.zmap)
    fields = dict(
        epsilon=eg.epsilon, gamma=eg.gamma, precondition_met=eg.gamma > eg.epsilon,
        i_x_y=x_info['x_y'], i_x_y_noisy=x_info['x_y_noisy'],
        i_z_y=z_info['z_y'], i_z_y_noisy=z_info['z_y_noisy'], zstar=zstar.to_dict(),
    )
    if not fields['precondition_met']:
        return Theorem2Report(**fields)
    return Theorem2Report(
        **fields,
        lower_ok=x_info['x_y'] - eg.epsilon <= z_info['z_y'] + tolerance,
        upper_ok=z_info['z_y'] <= x_info['x_y'] + tolerance,
        noisy_ok=z_info['z_y_noisy'] <= x_info['x_y_noisy'] - eg.gamma + eg.epsilon + tolerance,
    )


def map_classifier(joint_z_label: np.ndarray) -> Tuple[int, ...]:
    """Most probable label for each z (lowest label on ties)"""
    joint_z_label = validate_table(joint_z_label)
    return tuple(int(k) for k in np.argmax(joint_z_label, axis=1))


@dataclass(frozen=True)
class Lemma1Report:
    error: float
    bound: Optional[float]
    statement_bound: Optional[float]
    num_labels: int
    vacuous: bool
    holds: bool

    def to_dict(self) -> Dict:
        return asdict(self)


def lemma1_bound(joint_z_label: np.ndarray, classifier: Sequence[int],
                 tolerance: float = TheoryDefaults.TOLERANCE) -> Lemma1Report:
    """
    Error of a classifier Z → Ŷ against its lower bound

    The bound divides by log(|Y| − 1), which is zero for two labels; the
    report then marks the bound vacuous. statement_bound divides by
    log|Y| − 1 instead and is None when that is not positive.

    Args:
        joint_z_label: p(z, ỹ) as an m×|Y| table
        classifier: predicted label for each z
    """
    joint_z_label = validate_table(joint_z_label)
    if joint_z_label.ndim != 2:
        raise ConfigError(f"p(z, ỹ) must be a 2-axis table, got {joint_z_label.ndim} axes")
    m, num_labels = joint_z_label.shape
    classifier = np.asarray(classifier)
    if classifier.shape != (m,) or not np.issubdtype(classifier.dtype, np.integer):
        raise ConfigError(f"classifier table must give one integer label for each of the {m} z values")
    if np.any(classifier < 0) or np.any(classifier >= num_labels):
        raise ConfigError(f"classifier labels must lie in [0, {num_labels})")

    hit = np.zeros_like(joint_z_label, dtype=bool)
    hit[np.arange(m), classifier] = True
    error = float(joint_z_label[~hit].sum())

    numerator = entropy(joint_z_label, (1,)) - mutual_info(joint_z_label, (0,), (1,)) - binary_entropy(error)
    vacuous = num_labels <= 2
    bound = None if vacuous else numerator / math.log(num_labels - 1)
    statement_denominator = math.log(num_labels) - 1.0
    statement_bound = numerator / statement_denominator if statement_denominator > 0 else None
    holds = True if vacuous else error >= bound - tolerance
    return Lemma1Report(error, bound, statement_bound, num_labels, vacuous, holds)


def risk_gap(joint: DiscreteJoint, zmap: RepresentationMap) -> Tuple[float, float]:
    """(R(Z), R(X)) with the minimum CE risk of a representation equal to H(Y | ·)"""
    zyy = zmap.push_forward(joint.table, axis=0)
    return conditional_entropy(zyy, (1,), (0,)), conditional_entropy(joint.table, (1,), (0,))
