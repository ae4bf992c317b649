"""
Tests for the contrastive regularizers, cross-entropy and gradient audits
"""

import math

import numpy as np
import pytest

from src.losses import (
    LossConfig,
    PairWeights,
    analytic_grad_ctr_prime,
    analytic_grad_norm_tilde,
    batch_ctr_objective,
    closed_form_audit,
    confidence_weights,
    cosine_monotonicity,
    cross_entropy,
    ctr_pair_loss,
    ctr_prime_pair_loss,
    ctr_tilde_pair_loss,
    label_weights,
    pair_loss_gradcheck,
    batch_objective_gradcheck,
    t_grid,
    total_objective,
)
from src.numeric import Graph
from src.utils.errors import ConfigError, CTRRError, NumericError, ShapeError

E0 = np.array([1.0, 0.0])


def _at_cosine(c):
    return np.array([c, math.sqrt(1.0 - c * c)])


# ============================================================================
# Pair losses
# ============================================================================

def test_ctr_pair_minimum_is_minus_two():
    q_i, q_j = np.array([1.0, 2.0, -1.0]), np.array([0.5, -3.0, 2.0])
    out = ctr_pair_loss(q_i, 3.0 * q_i, q_j, 0.1 * q_j, same_label=True)
    assert out.value.item() == pytest.approx(-2.0, abs=1e-12)


def test_ctr_pair_swapped_targets_give_twice_the_cosine():
    q_i, q_j = np.array([1.0, 2.0, -1.0]), np.array([0.5, -3.0, 2.0])
    cos = q_i @ q_j / (np.linalg.norm(q_i) * np.linalg.norm(q_j))
    out = ctr_pair_loss(q_i, 3.0 * q_j, q_j, 0.1 * q_i, same_label=True)
    assert out.value.item() == pytest.approx(-2.0 * cos, abs=1e-12)


def test_ctr_pair_different_labels_is_zero():
    assert ctr_pair_loss(E0, E0, E0, E0, same_label=False).value.item() == 0.0


def test_ctr_pair_arithmetic():
    out = ctr_pair_loss(E0, _at_cosine(0.5), E0, _at_cosine(0.25), same_label=True)
    assert out.value.item() == pytest.approx(-0.75, abs=1e-12)


def test_ctr_pair_rejects_zero_vector():
    with pytest.raises(NumericError):
        ctr_pair_loss(np.zeros(2), E0, E0, E0, same_label=True)


def test_ctr_prime_gate_passes():
    # p_i . p_j = 0.9
    p_i, p_j = np.array([0.9, 0.1]), np.array([1.0, 0.0])
    out = ctr_prime_pair_loss(E0, _at_cosine(0.5), E0, _at_cosine(0.5), p_i, p_j, tau=0.8)
    assert out.value.item() == pytest.approx(-1.0, abs=1e-12)


def test_ctr_prime_gate_masks():
    p_i, p_j = np.array([0.3, 0.7]), np.array([1.0, 0.0])
    out = ctr_prime_pair_loss(E0, E0, E0, E0, p_i, p_j, tau=0.4)
    assert out.value.item() == 0.0


def test_ctr_prime_one_hot_aligned():
    p = np.array([0.0, 1.0])
    assert ctr_prime_pair_loss(E0, E0, E0, E0, p, p, tau=0.4).value.item() == pytest.approx(-2.0)


@pytest.mark.parametrize('cosine,expected', [
    (0.0, 0.0),
    (0.5, 2.0 * math.log(0.5)),
    (1.0, 2.0 * math.log(1e-4)),
])
def test_ctr_tilde_values(cosine, expected):
    p = np.array([1.0, 0.0])
    z = _at_cosine(cosine)
    out = ctr_tilde_pair_loss(E0, z, E0, z, p, p, tau=0.4, clamp_margin=1e-4)
    assert out.value.item() == pytest.approx(expected, abs=1e-9)


def test_ctr_tilde_aligned_value_is_clamped():
    p = np.array([1.0, 0.0])
    out = ctr_tilde_pair_loss(E0, E0, E0, E0, p, p, tau=0.4)
    assert out.value.item() == pytest.approx(-18.4207, abs=1e-4)


def test_z_arguments_receive_no_gradient():
    rng = np.random.default_rng(4)
    g = Graph()
    q_i, z_j, q_j, z_i = (g.leaf(v) for v in rng.normal(size=(4, 5)))
    g.backward(ctr_pair_loss(q_i, z_j, q_j, z_i, same_label=True))
    assert np.all(g.grad(z_j).data == 0.0)
    assert np.all(g.grad(z_i).data == 0.0)
    assert np.any(g.grad(q_i).data != 0.0)


@pytest.mark.parametrize('loss', ['ctr', 'ctr_prime', 'ctr_tilde'])
def test_pair_loss_backward_matches_finite_differences(loss):
    audit = pair_loss_gradcheck(loss, instances=100, seed=0)
    assert audit.instances == 100
    assert audit.passed(1e-4)


def test_pair_loss_gradcheck_rejects_unknown_loss():
    with pytest.raises(ConfigError):
        pair_loss_gradcheck('simclr', instances=1)


# ============================================================================
# Pair weights
# ============================================================================

def test_confidence_weights_identical_one_hot():
    W = confidence_weights([[1.0, 0.0], [1.0, 0.0]], tau=0.4)
    np.testing.assert_allclose(W.matrix, [[0.5, 0.5], [0.5, 0.5]])


def test_confidence_weights_orthogonal_rows():
    W = confidence_weights([[1.0, 0.0], [0.0, 1.0]], tau=0.4)
    np.testing.assert_array_equal(W.matrix, np.eye(2))


def test_confidence_weights_uniform_rows_keep_only_diagonal():
    W = confidence_weights(np.full((5, 10), 0.1), tau=0.4)
    np.testing.assert_array_equal(W.matrix, np.eye(5))


def test_confidence_weights_rows_sum_to_one():
    rng = np.random.default_rng(8)
    for _ in range(50):
        P = rng.dirichlet(np.ones(4), size=16)
        W = confidence_weights(P, tau=float(rng.uniform(0.0, 1.0)))
        np.testing.assert_allclose(W.matrix.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert np.all(np.diag(W.matrix) > 0)


def test_zero_tau_keeps_every_pair():
    P = np.random.default_rng(2).dirichlet(np.ones(3), size=6)
    assert np.all(confidence_weights(P, tau=0.0).matrix > 0)


def test_pair_weights_validation():
    with pytest.raises(ValueError):
        PairWeights(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        PairWeights(np.array([[0.0, 1.0], [0.5, 0.5]]))


def test_label_weights_share_row_mass():
    W = label_weights([0, 1, 0])
    np.testing.assert_allclose(W.matrix, [[0.5, 0, 0.5], [0, 1, 0], [0.5, 0, 0.5]])


def test_loss_config_validation():
    with pytest.raises(ConfigError):
        LossConfig(tau=1.5)
    with pytest.raises(ConfigError):
        LossConfig(lam=-1.0)
    with pytest.raises(ConfigError):
        LossConfig(regularizer='gce')


# ============================================================================
# Batch objective
# ============================================================================

def test_batch_single_row_aligned():
    g = Graph()
    Q = g.leaf([[1.0, 0.0]])
    out = batch_ctr_objective(Q, g.leaf([[2.0, 0.0]]), [[3.0, 0.0]], [[1.0, 0.0]],
                              PairWeights(np.ones((1, 1))), clamp_margin=1e-4)
    assert out.value.item() == pytest.approx(-(1.0 - 1e-4), abs=1e-12)


def test_batch_orthogonal_confidences_use_diagonal_only():
    rng = np.random.default_rng(3)
    Q1, Q2, Z1, Z2 = rng.normal(size=(4, 2, 3))
    W = confidence_weights([[1.0, 0.0], [0.0, 1.0]], tau=0.4)
    g = Graph()
    out = batch_ctr_objective(g.leaf(Q1), g.leaf(Q2), Z1, Z2, W)

    def unit(M):
        return M / np.linalg.norm(M, axis=1, keepdims=True)

    C1 = np.clip(unit(Q1) @ unit(Z2).T, -1 + 1e-4, 1 - 1e-4)
    C2 = np.clip(unit(Q2) @ unit(Z1).T, -1 + 1e-4, 1 - 1e-4)
    expected = -(np.trace(C1) + np.trace(C2)) / 4
    assert out.value.item() == pytest.approx(expected, abs=1e-12)


def test_batch_objective_backward_matches_finite_differences():
    assert batch_objective_gradcheck(instances=20, seed=1).passed(1e-5)


def test_batch_objective_is_finite_for_aligned_views():
    g = Graph()
    Q = np.random.default_rng(0).normal(size=(4, 3))
    W = confidence_weights(np.tile([1.0, 0.0], (4, 1)), tau=0.4)
    out = batch_ctr_objective(g.leaf(Q), g.leaf(Q), Q, Q, W)
    assert np.isfinite(out.value.item())


def test_batch_objective_shape_mismatch():
    g = Graph()
    with pytest.raises(ShapeError):
        batch_ctr_objective(g.leaf(np.ones((2, 3))), g.leaf(np.ones((2, 4))), np.ones((2, 3)),
                            np.ones((2, 3)), PairWeights(np.eye(2)))


# ============================================================================
# Cross-entropy and the total objective
# ============================================================================

def _clamped(P):
    g = Graph()
    return g.clamp(g.constant(P), 1e-4, 1 - 1e-4)


def test_cross_entropy_one_hot_after_clamp():
    out = cross_entropy(_clamped([[1.0, 0.0, 0.0]]), np.array([0]))
    assert out.value.item() == pytest.approx(-math.log(1 - 1e-4), rel=1e-12)


def test_cross_entropy_uniform_ten_classes():
    out = cross_entropy(_clamped(np.full((3, 10), 0.1)), np.array([0, 4, 9]))
    assert out.value.item() == pytest.approx(2.302585, abs=1e-6)


def test_cross_entropy_at_clamp_floor():
    out = cross_entropy(_clamped([[0.0, 1.0]]), np.array([0]))
    assert out.value.item() == pytest.approx(9.21034, abs=1e-5)


def test_cross_entropy_soft_labels():
    out = cross_entropy(_clamped([[0.5, 0.5]]), np.array([[0.3, 0.7]]))
    assert out.value.item() == pytest.approx(math.log(2.0))


def test_cross_entropy_rejects_bad_rows():
    with pytest.raises(CTRRError, match='sum to 1'):
        cross_entropy(_clamped([[0.5, 0.5]]), np.array([[0.3, 0.3]]))


def test_total_objective():
    assert total_objective(1.0, -0.5, 50.0) == pytest.approx(-24.0)
    assert total_objective(1.25, -3.0, 0.0) == 1.25


def test_total_objective_on_nodes():
    g = Graph()
    ce, ctr = g.leaf(0.7), g.leaf(-0.2)
    out = total_objective(ce, ctr, 50.0)
    assert out.value.item() == pytest.approx(0.7 + 50.0 * -0.2)


# ============================================================================
# Closed forms
# ============================================================================

def test_analytic_linear_orthogonal():
    grad, norm_sq = analytic_grad_ctr_prime([1.0, 0.0], [0.0, 1.0])
    np.testing.assert_allclose(grad, [0.0, -1.0], atol=1e-15)
    assert norm_sq == pytest.approx(1.0)


def test_analytic_linear_aligned_is_zero():
    grad, norm_sq = analytic_grad_ctr_prime([1.0, 0.0], [1.0, 0.0])
    np.testing.assert_array_equal(grad, [0.0, 0.0])
    assert norm_sq == 0.0


def test_analytic_linear_scales_with_norm():
    assert analytic_grad_ctr_prime([2.0, 0.0], [0.0, 1.0])[1] == pytest.approx(0.25)


def test_analytic_log_forms():
    assert analytic_grad_norm_tilde([1.0, 0.0], [0.0, 1.0]) == pytest.approx((1.0, 1.0))
    assert analytic_grad_norm_tilde([1.0, 0.0], _at_cosine(0.5)) == pytest.approx((1.5, 3.0))


def test_analytic_log_form_at_ceiling():
    with pytest.raises(NumericError, match='ceiling'):
        analytic_grad_norm_tilde([1.0, 0.0], [1.0, 0.0])


def test_t_grid_spans_from_zero():
    grid = t_grid(100)
    assert len(grid) == 100
    assert grid[0] == 0.0
    assert grid[-1] < 1.0 - 1e-4


def test_closed_form_audit():
    audit = closed_form_audit(100, seed=0)
    assert all(audit.linear_norm_matches)
    assert audit.linear_vector_error < 1e-8
    # both log-form expressions agree at t = 0 only
    assert audit.stated_matches[0]
    assert audit.matching_form == 'chain'
    assert audit.log_non_decreasing
    assert audit.linear_non_increasing
    report = audit.to_dict()
    assert len(report['samples']) == 100
    assert report['samples'][0]['t'] == pytest.approx(0.0, abs=1e-12)


def test_both_forms_share_the_aligned_maximizer():
    assert cosine_monotonicity(100) == {
        'linear_strictly_decreasing': True,
        'log_strictly_decreasing': True,
    }
