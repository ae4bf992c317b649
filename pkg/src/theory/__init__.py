"""
Exact information-theoretic checks on small finite distributions
"""

from .measures import QUERIES, info_measures, validate_table, binary_entropy
from .joint import (
    DiscreteJoint,
    EpsilonGammaReport,
    RepresentationMap,
    positive_pair_joint,
    epsilon_gamma,
    representation_joint,
    representation_info,
    label_info,
)
from .search import ZStarResult, brute_force_zstar, check_enumeration_guard
from .bounds import Theorem2Report, Lemma1Report, verify_theorem2, lemma1_bound, map_classifier, risk_gap
from .family import (
    FAMILY_SHAPES,
    FAMILY_ETAS,
    FAMILY_RHOS,
    FamilyReport,
    epsilon_gamma_family,
    uniform_constant_case,
    verify_instance,
    verify_family,
)

__all__ = [
    'QUERIES',
    'info_measures',
    'validate_table',
    'binary_entropy',
    'DiscreteJoint',
    'EpsilonGammaReport',
    'RepresentationMap',
    'positive_pair_joint',
    'epsilon_gamma',
    'representation_joint',
    'representation_info',
    'label_info',
    'ZStarResult',
    'brute_force_zstar',
    'check_enumeration_guard',
    'Theorem2Report',
    'Lemma1Report',
    'verify_theorem2',
    'lemma1_bound',
    'map_classifier',
    'risk_gap',
    'FAMILY_SHAPES',
    'FAMILY_ETAS',
    'FAMILY_RHOS',
    'FamilyReport',
    'epsilon_gamma_family',
    'uniform_constant_case',
    'verify_instance',
    'verify_family',
]
