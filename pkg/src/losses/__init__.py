"""
Contrastive regularizers, cross-entropy and their gradient audits
"""

from .contrastive import (
    LossConfig,
    PairWeights,
    REGULARIZERS,
    ctr_pair_loss,
    ctr_prime_pair_loss,
    ctr_tilde_pair_loss,
    confidence_indicator,
    confidence_weights,
    label_weights,
    batch_ctr_objective,
    regularizer_weights,
    regularizer_form,
)
from .classification import one_hot, cross_entropy, per_sample_cross_entropy, total_objective
from .analytic import analytic_grad_ctr_prime, analytic_grad_norm_tilde, vectors_with_cosine
from .audit import (
    LossGradAudit,
    ClosedFormAudit,
    pair_loss_gradcheck,
    batch_objective_gradcheck,
    closed_form_audit,
    cosine_monotonicity,
    t_grid,
)

__all__ = [
    'LossConfig',
    'PairWeights',
    'REGULARIZERS',
    'ctr_pair_loss',
    'ctr_prime_pair_loss',
    'ctr_tilde_pair_loss',
    'confidence_indicator',
    'confidence_weights',
    'label_weights',
    'batch_ctr_objective',
    'regularizer_weights',
    'regularizer_form',
    'one_hot',
    'cross_entropy',
    'per_sample_cross_entropy',
    'total_objective',
    'analytic_grad_ctr_prime',
    'analytic_grad_norm_tilde',
    'vectors_with_cosine',
    'LossGradAudit',
    'ClosedFormAudit',
    'pair_loss_gradcheck',
    'batch_objective_gradcheck',
    'closed_form_audit',
    'cosine_monotonicity',
    't_grid',
]
