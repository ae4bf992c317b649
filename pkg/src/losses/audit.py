"""
Gradient audits of the contrastive regularizers

- pair/batch losses: backward() against central differences
- closed forms: analytic gradient norms against backward() over a grid of t
- gradient domination: how the squared gradient norm moves with t for the
  linear and the log form
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from src.config.settings import TrainingDefaults
from src.losses.analytic import analytic_grad_ctr_prime, analytic_grad_norm_tilde, vectors_with_cosine
from src.losses.contrastive import (
    batch_ctr_objective,
    confidence_weights,
    ctr_pair_loss,
    ctr_prime_pair_loss,
    ctr_tilde_pair_loss,
)
from src.numeric.gradcheck import DEFAULT_STEP, check_gradient_leaves
from src.numeric.graph import Graph
from src.utils.errors import ConfigError

MATCH_TOLERANCE = 1e-6
VECTOR_TOLERANCE = 1e-8
GRID_POINTS = 100

PAIR_LOSSES = ('ctr', 'ctr_prime', 'ctr_tilde')


@dataclass
class LossGradAudit:
    """backward() vs finite differences over random instances of one loss"""
    loss: str
    instances: int
    max_relative_error: float
    errors: List[float] = field(default_factory=list)

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_relative_error <= tolerance

    def to_dict(self) -> Dict:
        return {'loss': self.loss, 'instances': self.instances,
                'max_relative_error': self.max_relative_error}


@dataclass
class ClosedFormAudit:
    """
    Closed-form gradient norms against backward() on a t grid

    Attributes:
        t_values: cosine of each grid point (measured on the built vectors)
        linear_vector_error: max abs difference between the analytic and
            autodiff gradient vector of the linear form
        linear_norm_matches: c_i (1 - t^2) matches per t
        stated_matches / chain_matches: log-form closed forms matching per t
        matching_form: 'chain', 'stated', 'both' or 'neither' over the grid
        log_non_decreasing / linear_non_increasing: domination ordering on
            unit vectors
    """
    t_values: List[float]
    clamp_margin: float
    autodiff_linear: List[float]
    autodiff_log: List[float]
    closed_linear: List[float]
    closed_stated: List[float]
    closed_chain: List[float]
    linear_vector_error: float
    linear_norm_matches: List[bool]
    stated_matches: List[bool]
    chain_matches: List[bool]
    unit_linear: List[float]
    unit_log: List[float]

    @property
    def matching_form(self) -> str:
        stated, chain = all(self.stated_matches), all(self.chain_matches)
        if stated and chain:
            return 'both'
        if chain:
            return 'chain'
        if stated:
            return 'stated'
        return 'neither'

    @property
    def log_non_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.unit_log) >= 0.0))

    @property
    def linear_non_increasing(self) -> bool:
        return bool(np.all(np.diff(self.unit_linear) <= 0.0))

    def to_dict(self) -> Dict:
        return {
            'clamp_margin': self.clamp_margin,
            'matching_form': self.matching_form,
            'linear_vector_error': self.linear_vector_error,
            'linear_closed_form_matches': all(self.linear_norm_matches),
            'log_gradient_non_decreasing': self.log_non_decreasing,
            'linear_gradient_non_increasing': self.linear_non_increasing,
            'samples': [
                {
                    't': t,
                    'autodiff_linear': a_lin,
                    'autodiff_log': a_log,
                    'closed_linear': c_lin,
                    'closed_stated': c_st,
                    'closed_chain': c_chn,
                    'stated_matches': pm,
                    'chain_matches': cm,
                }
                for t, a_lin, a_log, c_lin, c_st, c_chn, pm, cm in zip(
                    self.t_values, self.autodiff_linear, self.autodiff_log, self.closed_linear,
                    self.closed_stated, self.closed_chain, self.stated_matches, self.chain_matches)
            ],
        }


def _matches(a: float, b: float, tolerance: float = MATCH_TOLERANCE) -> bool:
    return abs(a - b) <= tolerance * max(abs(a), abs(b), 1e-300)


# ============================================================================
# backward() vs finite differences
# ============================================================================

def _pair_builder(loss: str, z_j: np.ndarray, z_i: np.ndarray, tau: float, clamp_margin: float):
    same = np.array([1.0, 0.0])

    def build(graph: Graph, leaves):
        q_i, q_j = leaves
        if loss == 'ctr':
            return ctr_pair_loss(q_i, z_j, q_j, z_i, same_label=True)
        if loss == 'ctr_prime':
            return ctr_prime_pair_loss(q_i, z_j, q_j, z_i, same, same, tau)
        return ctr_tilde_pair_loss(q_i, z_j, q_j, z_i, same, same, tau, clamp_margin)

    return build


def pair_loss_gradcheck(loss: str, instances: int = 100, seed: int = 0, dim: int = 6,
                        tau: float = TrainingDefaults.TAU,
                        clamp_margin: float = TrainingDefaults.CLAMP_MARGIN,
                        step: float = DEFAULT_STEP) -> LossGradAudit:
    """
    Gradient of a pair loss with respect to (q_i, q_j) at random points, z fixed

    Args:
        loss: 'ctr' (label indicator), 'ctr_prime' (linear, gated) or
            'ctr_tilde' (log form, gated)
    """
    if loss not in PAIR_LOSSES:
        raise ConfigError(f"loss must be one of {PAIR_LOSSES}, got '{loss}'")
    rng = np.random.default_rng(seed)
    worst = []
    for _ in range(instances):
        q_i, z_j, q_j, z_i = rng.normal(size=(4, dim))
        report = check_gradient_leaves(_pair_builder(loss, z_j, z_i, tau, clamp_margin), [q_i, q_j], step)
        worst.append(report.max_relative_error)
    return LossGradAudit(loss, instances, float(max(worst)) if worst else 0.0, worst)


def batch_objective_gradcheck(instances: int = 100, seed: int = 0, batch: int = 4, dim: int = 6,
                              tau: float = 0.2, coordinates: int = 16,
                              clamp_margin: float = TrainingDefaults.CLAMP_MARGIN,
                              step: float = DEFAULT_STEP) -> LossGradAudit:
    """
    Gradient of the weighted batch objective with respect to (Q1, Q2)

    Each instance draws random Q/Z matrices and pair weights from random
    probability rows, then checks a random subset of coordinates.
    """
    rng = np.random.default_rng(seed)
    worst = []
    for _ in range(instances):
        Q1, Q2, Z1, Z2 = rng.normal(size=(4, batch, dim))
        W = confidence_weights(rng.dirichlet(np.ones(3), size=batch), tau)

        def build(graph: Graph, leaves):
            return batch_ctr_objective(leaves[0], leaves[1], Z1, Z2, W, clamp_margin)

        total = 2 * batch * dim
        subset = np.sort(rng.choice(total, size=min(coordinates, total), replace=False))
        report = check_gradient_leaves(build, [Q1, Q2], step, coordinates=subset)
        worst.append(report.max_relative_error)
    return LossGradAudit('batch', instances, float(max(worst)) if worst else 0.0, worst)


# ============================================================================
# Closed forms
# ============================================================================

def _autodiff_grad_q_i(q_i: np.ndarray, q_j: np.ndarray, log_form: bool, clamp_margin: float) -> np.ndarray:
    """
    Gradient with respect to q_i with h taken as the identity: z = stopgrad(q)
    """
    graph = Graph()
    qi = graph.leaf(q_i, name='q_i')
    qj = graph.leaf(q_j, name='q_j')
    same = np.array([1.0])
    if log_form:
        out = ctr_tilde_pair_loss(qi, qj, qj, qi, same, same, 0.0, clamp_margin)
    else:
        out = ctr_prime_pair_loss(qi, qj, qj, qi, same, same, 0.0)
    graph.backward(out)
    return graph.grad(qi).numpy()


def t_grid(points: int = GRID_POINTS, clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> np.ndarray:
    """points values of t evenly spaced on [0, 1 - δ)"""
    return np.linspace(0.0, 1.0 - clamp_margin, points, endpoint=False)


def closed_form_audit(points: int = GRID_POINTS, seed: int = 0, dim: int = 8,
                      clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> ClosedFormAudit:
    """
    Compare the closed-form gradient norms with backward() on a t grid

    At each t a pair (q_i, q_j) with cosine t is drawn in a random plane with
    a random ||q_i||, so the c_i factor is exercised. The domination ordering
    is measured separately on unit vectors.
    """
    rng = np.random.default_rng(seed)
    fields = {key: [] for key in ('t', 'a_lin', 'a_log', 'c_lin', 'c_st', 'c_chn',
                                  'lin_ok', 'st_ok', 'chn_ok', 'u_lin', 'u_log')}
    vector_error = 0.0

    for t in t_grid(points, clamp_margin):
        q_i, q_j = vectors_with_cosine(t, dim, rng, scale_i=float(rng.uniform(0.5, 2.0)))
        g_lin = _autodiff_grad_q_i(q_i, q_j, False, clamp_margin)
        g_log = _autodiff_grad_q_i(q_i, q_j, True, clamp_margin)
        closed_vec, closed_lin = analytic_grad_ctr_prime(q_i, q_j)
        stated, chain = analytic_grad_norm_tilde(q_i, q_j, clamp_margin)
        vector_error = max(vector_error, float(np.max(np.abs(closed_vec - g_lin))))

        norm_lin, norm_log = float(g_lin @ g_lin), float(g_log @ g_log)
        u_i = q_i / np.linalg.norm(q_i)
        g_unit_lin = _autodiff_grad_q_i(u_i, q_j, False, clamp_margin)
        g_unit_log = _autodiff_grad_q_i(u_i, q_j, True, clamp_margin)

        fields['t'].append(float(u_i @ (q_j / np.linalg.norm(q_j))))
        fields['a_lin'].append(norm_lin)
        fields['a_log'].append(norm_log)
        fields['c_lin'].append(closed_lin)
        fields['c_st'].append(stated)
        fields['c_chn'].append(chain)
        fields['lin_ok'].append(abs(norm_lin - closed_lin) <= VECTOR_TOLERANCE)
        fields['st_ok'].append(_matches(norm_log, stated))
        fields['chn_ok'].append(_matches(norm_log, chain))
        fields['u_lin'].append(float(g_unit_lin @ g_unit_lin))
        fields['u_log'].append(float(g_unit_log @ g_unit_log))

    return ClosedFormAudit(
        t_values=fields['t'],
        clamp_margin=clamp_margin,
        autodiff_linear=fields['a_lin'],
        autodiff_log=fields['a_log'],
        closed_linear=fields['c_lin'],
        closed_stated=fields['c_st'],
        closed_chain=fields['c_chn'],
        linear_vector_error=vector_error,
        linear_norm_matches=fields['lin_ok'],
        stated_matches=fields['st_ok'],
        chain_matches=fields['chn_ok'],
        unit_linear=fields['u_lin'],
        unit_log=fields['u_log'],
    )


def cosine_monotonicity(points: int = GRID_POINTS,
                        clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> Dict[str, bool]:
    """
    Whether the linear and log pair terms strictly decrease as both cosines
    rise across [-1 + δ, 1 - δ], so both share the aligned maximizer
    """
    lo, hi = -1.0 + clamp_margin, 1.0 - clamp_margin
    e0, e1 = np.eye(2)
    same = np.array([1.0])
    linear, log_form = [], []
    for c in np.linspace(lo, hi, points):
        q = e0
        z = c * e0 + np.sqrt(max(0.0, 1.0 - c * c)) * e1
        linear.append(ctr_prime_pair_loss(q, z, q, z, same, same, 0.0).value.item())
        log_form.append(ctr_tilde_pair_loss(q, z, q, z, same, same, 0.0, clamp_margin).value.item())
    return {
        'linear_strictly_decreasing': bool(np.all(np.diff(linear) < 0)),
        'log_strictly_decreasing': bool(np.all(np.diff(log_form) < 0)),
    }
