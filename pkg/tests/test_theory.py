"""
Tests for the exact information measures, positive-pair joints, the Z*
search and the representation bounds
"""

import math
from itertools import product

import numpy as np
import pytest

from src.theory import (
    DiscreteJoint,
    RepresentationMap,
    binary_entropy,
    brute_force_zstar,
    check_enumeration_guard,
    epsilon_gamma,
    epsilon_gamma_family,
    info_measures,
    label_info,
    lemma1_bound,
    map_classifier,
    positive_pair_joint,
    representation_info,
    risk_gap,
    uniform_constant_case,
    verify_family,
    verify_instance,
    verify_theorem2,
)
from src.theory.measures import conditional_entropy, entropy, mutual_info
from src.utils.errors import ConfigError, CTRRError, EnumerationGuardError, NumericError


def random_table(rng, shape):
    table = rng.random(shape)
    return table / table.sum()


def labelled_joint(p_xy, channel=None):
    p_xy = np.asarray(p_xy, dtype=float)
    channel = np.eye(p_xy.shape[1]) if channel is None else channel
    return DiscreteJoint.from_channel(p_xy, channel)


# ============================================================================
# Measures
# ============================================================================

def test_independent_variables_share_no_information():
    table = np.outer([0.2, 0.8], [0.1, 0.6, 0.3])
    assert info_measures(table, 'mutual_info', [0], [1]) == pytest.approx(0.0, abs=1e-15)


def test_copy_of_uniform_variable():
    table = np.eye(4) / 4
    assert info_measures(table, 'mutual_info', ['x'], ['y'], names=['x', 'y']) == pytest.approx(1.386294, abs=1e-6)
    assert info_measures(table, 'entropy', [0]) == pytest.approx(math.log(4))


def test_chain_rule_on_random_tables():
    rng = np.random.default_rng(0)
    for _ in range(100):
        table = random_table(rng, (3, 4))
        lhs = mutual_info(table, (0,), (1,))
        rhs = entropy(table, (1,)) - conditional_entropy(table, (1,), (0,))
        assert abs(lhs - rhs) <= 1e-12


def test_conditional_mutual_information_of_markov_chain():
    # X -> Y -> W: I(X; W | Y) = 0
    rng = np.random.default_rng(1)
    p_x = rng.dirichlet(np.ones(3))
    a, b = rng.dirichlet(np.ones(3), size=3), rng.dirichlet(np.ones(2), size=3)
    table = p_x[:, None, None] * a[:, :, None] * b[None, :, :]
    assert info_measures(table, 'conditional_mutual_info', [0], [2], given=[1]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize('kwargs,message', [
    ({'query': 'kl', 'a': [0]}, 'unknown query'),
    ({'query': 'entropy', 'a': [2]}, 'out of range'),
    ({'query': 'mutual_info', 'a': [0], 'b': [0]}, 'disjoint'),
    ({'query': 'mutual_info', 'a': [0]}, 'second variable group'),
    ({'query': 'entropy', 'a': [0], 'given': [1]}, 'conditioning group'),
    ({'query': 'entropy', 'a': ['z'], 'names': ['x', 'y']}, 'unknown variable'),
])
def test_invalid_queries(kwargs, message):
    with pytest.raises(CTRRError, match=message):
        info_measures(np.eye(2) / 2, **kwargs)


def test_table_must_sum_to_one():
    with pytest.raises(NumericError, match='sums to'):
        info_measures(np.eye(2), 'entropy', [0])


def test_binary_entropy_at_three_quarters():
    assert binary_entropy(0.75) == pytest.approx(0.562335, abs=1e-6)
    assert binary_entropy(0.0) == 0.0


# ============================================================================
# Joints and positive pairs
# ============================================================================

def test_one_input_per_class_gives_diagonal_pairs():
    joint = labelled_joint(np.diag([0.2, 0.3, 0.5]))
    pairs = positive_pair_joint(joint)
    np.testing.assert_allclose(pairs, np.diag([0.2, 0.3, 0.5]), atol=1e-15)
    assert label_info(joint)['x_x_pos'] == pytest.approx(entropy(pairs, (0,)))


def test_input_independent_of_class_gives_independent_pairs():
    joint = labelled_joint(np.outer([0.25, 0.75], [0.5, 0.5]))
    assert label_info(joint)['x_x_pos'] == pytest.approx(0.0, abs=1e-12)


def test_pair_joint_is_symmetric_with_equal_marginals():
    rng = np.random.default_rng(3)
    for _ in range(20):
        joint = labelled_joint(random_table(rng, (4, 3)))
        pairs = positive_pair_joint(joint)
        np.testing.assert_allclose(pairs, pairs.T, atol=1e-15)
        np.testing.assert_allclose(pairs.sum(axis=0), joint.p_xy.sum(axis=1), atol=1e-15)
        assert pairs.sum() == pytest.approx(1.0)


def test_markov_check_rejects_instance_dependent_noise():
    table = np.zeros((2, 1, 2))
    table[0, 0, 0] = table[1, 0, 1] = 0.5
    with pytest.raises(ConfigError, match='markov=False'):
        DiscreteJoint(table)
    assert DiscreteJoint(table, markov=False).support_x == 2


def test_epsilon_is_zero_when_inputs_reveal_the_class():
    joint = labelled_joint(np.diag([1 / 3] * 3), np.full((3, 3), 1 / 3))
    report = epsilon_gamma(joint)
    assert report.epsilon == pytest.approx(0.0, abs=1e-12)
    # the noisy label is independent of everything
    assert report.gamma == pytest.approx(0.0, abs=1e-12)
    assert epsilon_gamma(joint, epsilon=0.0, gamma=0.1).satisfied is False


def test_noise_bit_construction_separates_epsilon_and_gamma():
    # X = (Y, bit); the label flips exactly when the bit is set
    p_xy = np.zeros((4, 2))
    channel = np.zeros((4, 2, 2))
    for x, y in product(range(4), range(2)):
        channel[x, y, (y + x % 2) % 2] = 1.0
        if x // 2 == y:
            p_xy[x, y] = 0.25
    report = epsilon_gamma(DiscreteJoint.instance_dependent(p_xy, channel))
    assert report.epsilon == pytest.approx(0.0, abs=1e-12)
    assert report.gamma == pytest.approx(math.log(2), abs=1e-12)
    assert report.satisfies(0.0, 0.5)


def test_epsilon_gamma_query_needs_both_values():
    with pytest.raises(ConfigError):
        epsilon_gamma(labelled_joint(np.eye(2) / 2), epsilon=0.1)


# ============================================================================
# Z* search
# ============================================================================

def test_identity_ceiling_when_codomain_covers_inputs():
    rng = np.random.default_rng(4)
    joint = labelled_joint(random_table(rng, (4, 2)))
    result = brute_force_zstar(joint, codomain=4)
    assert result.value == pytest.approx(label_info(joint)['x_x_pos'], abs=1e-12)
    assert result.maps_evaluated == 4 ** 4


def test_single_value_codomain_carries_nothing():
    joint = labelled_joint(random_table(np.random.default_rng(5), (3, 2)))
    result = brute_force_zstar(joint, codomain=1)
    assert result.value == 0.0
    assert result.zmap.table == (0, 0, 0)


def test_two_class_partition_is_the_maximiser():
    p_xy = np.array([[0.25, 0.0], [0.25, 0.0], [0.0, 0.25], [0.0, 0.25]])
    result = brute_force_zstar(labelled_joint(p_xy), codomain=2)
    assert result.zmap.table == (0, 0, 1, 1)
    assert result.value == pytest.approx(math.log(2))


def test_search_is_independent_of_thread_count():
    joint = labelled_joint(random_table(np.random.default_rng(6), (6, 3)))
    single = brute_force_zstar(joint, 3, threads=1)
    pooled = brute_force_zstar(joint, 3, threads=5)
    assert single.zmap == pooled.zmap
    assert single.value == pooled.value


def test_enumeration_guard():
    with pytest.raises(EnumerationGuardError, match=r'\|X\|=9'):
        check_enumeration_guard(9, 2)
    with pytest.raises(EnumerationGuardError, match='m=5'):
        check_enumeration_guard(4, 5)
    with pytest.raises(ConfigError):
        check_enumeration_guard(4, 0)


def test_maps_never_add_information():
    rng = np.random.default_rng(7)
    joint = labelled_joint(random_table(rng, (5, 3)), rng.dirichlet(np.ones(3), size=3))
    ceiling = label_info(joint)
    for table in product(range(2), repeat=5):
        info = representation_info(joint, RepresentationMap(table, 2))
        assert info['z_y'] <= ceiling['x_y'] + 1e-12
        assert info['z_y_noisy'] <= ceiling['x_y_noisy'] + 1e-12
        assert info['z_x_pos'] <= ceiling['x_x_pos'] + 1e-12


# ============================================================================
# Bounds
# ============================================================================

def test_zero_epsilon_collapses_the_sandwich():
    joint = labelled_joint(np.diag([0.5, 0.3, 0.2]), np.array([[0.6, 0.4, 0], [0, 0.7, 0.3], [0.2, 0, 0.8]]))
    report = verify_theorem2(joint, codomain=3)
    assert report.epsilon == pytest.approx(0.0, abs=1e-12)
    assert report.i_z_y == pytest.approx(report.i_x_y, abs=1e-12)


def test_failed_precondition_makes_no_claim():
    # the noisy label is pure noise, so gamma = 0 = epsilon
    joint = labelled_joint(np.eye(2) / 2, np.full((2, 2), 0.5))
    report = verify_theorem2(joint, codomain=2)
    assert not report.precondition_met
    assert report.passed is None
    assert report.to_dict()['lower_ok'] is None


def test_uniform_labels_through_constant_map_are_tight():
    table, classifier = uniform_constant_case(4)
    report = lemma1_bound(table, classifier)
    assert report.error == pytest.approx(0.75)
    assert report.bound == pytest.approx(0.75, abs=1e-12)
    assert report.holds


def test_perfect_classifier_has_non_positive_bound():
    report = lemma1_bound(np.eye(3) / 3, (0, 1, 2))
    assert report.error == 0.0
    assert report.bound <= 1e-12
    assert report.holds


def test_error_bound_on_random_instances():
    rng = np.random.default_rng(9)
    for _ in range(200):
        labels = int(rng.integers(3, 6))
        m = int(rng.integers(1, 5))
        table = random_table(rng, (m, labels))
        classifier = tuple(int(k) for k in rng.integers(0, labels, size=m))
        assert lemma1_bound(table, classifier).holds
        assert lemma1_bound(table, map_classifier(table)).holds


def test_two_labels_make_the_bound_vacuous():
    report = lemma1_bound(np.array([[0.4, 0.1], [0.2, 0.3]]), (0, 1))
    assert report.vacuous
    assert report.bound is None
    assert report.holds


def test_classifier_must_cover_every_representation():
    with pytest.raises(ConfigError):
        lemma1_bound(np.eye(3) / 3, (0, 1))
    with pytest.raises(ConfigError):
        lemma1_bound(np.eye(3) / 3, (0, 1, 3))


def test_risk_gap_extremes():
    joint = labelled_joint(np.diag([0.5, 0.25, 0.25]))
    assert risk_gap(joint, RepresentationMap.identity(3)) == pytest.approx((0.0, 0.0), abs=1e-12)
    risk_z, risk_x = risk_gap(joint, RepresentationMap.constant(3))
    assert risk_z == pytest.approx(entropy(joint.table, (1,)))
    assert risk_x == pytest.approx(0.0, abs=1e-12)


# ============================================================================
# Constructed family
# ============================================================================

def test_family_member_is_a_distribution():
    joint = epsilon_gamma_family(3, 2, eta=0.05, rho=0.9)
    assert joint.shape == (6, 3, 3)
    assert joint.table.sum() == pytest.approx(1.0)
    assert not joint.markov


def test_clean_copy_member_passes():
    result = verify_instance(epsilon_gamma_family(2, 3, eta=0.0, rho=1.0), codomain=2)
    assert result['theorem2']['precondition_met']
    assert result['passed']
    assert result['risk_gap']['holds']


@pytest.mark.parametrize('kwargs', [
    {'classes': 1, 'background': 2, 'eta': 0.0, 'rho': 0.5},
    {'classes': 2, 'background': 0, 'eta': 0.0, 'rho': 0.5},
    {'classes': 2, 'background': 2, 'eta': 1.5, 'rho': 0.5},
])
def test_family_parameter_validation(kwargs):
    with pytest.raises(ConfigError):
        epsilon_gamma_family(**kwargs)


def test_full_family_verifies():
    report = verify_family()
    document = report.to_dict()
    assert document['instance_count'] == 64
    assert document['failure_count'] == 0
    assert report.preconditions_met >= 16
    assert report.lemma1_tight['tight']
    assert report.passed


def test_family_guard_runs_before_enumeration():
    with pytest.raises(EnumerationGuardError):
        verify_family(shapes=((3, 3),))
