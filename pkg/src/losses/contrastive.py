"""
Contrastive regularizers

Pair forms (vectors):
    ctr_pair_loss        -(<q~i, z~j> + <q~j, z~i>) * 1{same label}
    ctr_prime_pair_loss  -(<q~i, z~j> + <q~j, z~i>) * 1{p_i.p_j >= tau}
    ctr_tilde_pair_loss  (log(1 - s1) + log(1 - s2)) * 1{p_i.p_j >= tau}

Batch form (matrices) follows the training pseudocode: cosine matrices are
clamped, same-image pairs use the linear term, cross-image pairs the log
term, rows are weighted by detached confidence weights.

z arguments always pass through stop_gradient; x~ denotes x / ||x||.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from src.config.settings import TrainingDefaults
from src.numeric.graph import Graph, NodeRef
from src.numeric.tensor import ArrayLike, as_array
from src.utils.errors import ConfigError, ShapeError

Operand = Union[NodeRef, ArrayLike]

REGULARIZERS = ('ctrr', 'linear', 'label')


@dataclass(frozen=True)
class LossConfig:
    """
    Attributes:
        lam: regularization strength λ >= 0
        tau: confidence threshold τ in [0, 1]
        clamp_margin: δ used for cosine and probability clamps
        regularizer: 'ctrr' (log form), 'linear' (indicator-thresholded
            linear form) or 'label' (linear form weighted by label equality)
    """
    lam: float = TrainingDefaults.LAMBDA
    tau: float = TrainingDefaults.TAU
    clamp_margin: float = TrainingDefaults.CLAMP_MARGIN
    regularizer: str = 'ctrr'

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError(f"lambda must be finite and >= 0, got {self.lam}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {self.tau}")
        if not 0.0 < self.clamp_margin < 0.5:
            raise ConfigError(f"clamp_margin must be in (0, 0.5), got {self.clamp_margin}")
        if self.regularizer not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}, got '{self.regularizer}'")


@dataclass(frozen=True)
class PairWeights:
    """
    Row-stochastic B x B pair weights (detached from differentiation)
    """
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError('PairWeights', [m.shape], "expected a square matrix")
        if np.any(m < 0):
            raise ValueError("pair weights must be non-negative")
        if np.any(np.diag(m) <= 0):
            raise ValueError("pair weights must keep every diagonal entry positive")
        if not np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"pair weight rows must sum to 1, got {m.sum(axis=1)}")
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


# ============================================================================
# Helpers
# ============================================================================

def _graph_of(*operands: Operand) -> Graph:
    for operand in operands:
        if isinstance(operand, NodeRef):
            return operand.graph
    return Graph()


def _node(graph: Graph, operand: Operand, name: Optional[str] = None) -> NodeRef:
    if isinstance(operand, NodeRef):
        if operand.graph is not graph:
            raise ValueError("operands belong to different graphs")
        return operand
    return graph.constant(as_array(operand), name=name)


def _cosine(graph: Graph, q: NodeRef, z: NodeRef) -> NodeRef:
    return graph.dot(graph.normalize(q), graph.normalize(graph.stop_gradient(z)))


def _check_vectors(*nodes: NodeRef):
    shapes = [n.shape for n in nodes]
    if any(len(s) != 1 for s in shapes) or len(set(shapes)) != 1:
        raise ShapeError('pair_loss', shapes, "expected vectors of equal length")


def confidence_indicator(p_i: ArrayLike, p_j: ArrayLike, tau: float) -> float:
    """1{p_i . p_j >= tau} on detached probability vectors"""
    return 1.0 if float(np.dot(as_array(p_i), as_array(p_j))) >= tau else 0.0


# ============================================================================
# Pair losses
# ============================================================================

def ctr_pair_loss(q_i: Operand, z_j: Operand, q_j: Operand, z_i: Operand, same_label: bool) -> NodeRef:
    """
    Label-indicator contrastive term for one pair

    Minimum -2 is attained when q~i = z~j and q~j = z~i.

    Raises:
        NumericError: a zero-norm vector
    """
    graph = _graph_of(q_i, z_j, q_j, z_i)
    q_i, z_j, q_j, z_i = (_node(graph, v) for v in (q_i, z_j, q_j, z_i))
    _check_vectors(q_i, z_j, q_j, z_i)
    total = graph.add(_cosine(graph, q_i, z_j), _cosine(graph, q_j, z_i))
    return graph.affine(total, scale=-1.0 if same_label else 0.0)


def ctr_prime_pair_loss(q_i: Operand, z_j: Operand, q_j: Operand, z_i: Operand,
                        p_i: ArrayLike, p_j: ArrayLike, tau: float) -> NodeRef:
    """Linear contrastive term gated by the confidence criterion p_i . p_j >= tau"""
    graph = _graph_of(q_i, z_j, q_j, z_i)
    q_i, z_j, q_j, z_i = (_node(graph, v) for v in (q_i, z_j, q_j, z_i))
    _check_vectors(q_i, z_j, q_j, z_i)
    gate = confidence_indicator(p_i, p_j, tau)
    total = graph.add(_cosine(graph, q_i, z_j), _cosine(graph, q_j, z_i))
    return graph.affine(total, scale=-gate)


def ctr_tilde_pair_loss(q_i: Operand, z_j: Operand, q_j: Operand, z_i: Operand,
                        p_i: ArrayLike, p_j: ArrayLike, tau: float,
                        clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> NodeRef:
    """
    Log-form contrastive term (CTRR)

    Each cosine is clamped to [-1 + δ, 1 - δ] before log(1 - s), so the loss
    is finite for any input.
    """
    graph = _graph_of(q_i, z_j, q_j, z_i)
    q_i, z_j, q_j, z_i = (_node(graph, v) for v in (q_i, z_j, q_j, z_i))
    _check_vectors(q_i, z_j, q_j, z_i)
    gate = confidence_indicator(p_i, p_j, tau)
    lo, hi = -1.0 + clamp_margin, 1.0 - clamp_margin
    terms = []
    for q, z in ((q_i, z_j), (q_j, z_i)):
        s = graph.clamp(_cosine(graph, q, z), lo, hi)
        terms.append(graph.log(graph.affine(s, scale=-1.0, shift=1.0)))
    return graph.affine(graph.add(terms[0], terms[1]), scale=gate)


# ============================================================================
# Batch form
# ============================================================================

def confidence_weights(P: ArrayLike, tau: float) -> PairWeights:
    """
    Pair weights from classifier agreement

    S = P P^T with the diagonal overwritten to 1, entries below tau zeroed,
    rows normalised. The diagonal always survives because tau <= 1.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0, 1], got {tau}")
    P = as_array(P)
    if P.ndim != 2:
        raise ShapeError('confidence_weights', [P.shape], "expected a B x K matrix")
    S = P @ P.T
    np.fill_diagonal(S, 1.0)
    S = S * (S >= tau)
    return PairWeights(S / S.sum(axis=1, keepdims=True))


def label_weights(labels: ArrayLike) -> PairWeights:
    """Pair weights from label equality (same-label pairs share the row mass)"""
    labels = np.asarray(labels).reshape(-1)
    S = (labels[:, None] == labels[None, :]).astype(np.float64)
    return PairWeights(S / S.sum(axis=1, keepdims=True))


def batch_ctr_objective(Q1: NodeRef, Q2: NodeRef, Z1: Operand, Z2: Operand, W: PairWeights,
                        clamp_margin: float = TrainingDefaults.CLAMP_MARGIN,
                        form: str = 'log') -> NodeRef:
    """
    Weighted batch contrastive objective

    Args:
        Q1, Q2: predictor outputs of the two strong views (B x D)
        Z1, Z2: encoder outputs of the two views; stop-gradient is applied here
        W: detached pair weights (B x B)
        clamp_margin: δ for the cosine clamp
        form: 'log' (same-image pairs linear, cross-image pairs log(1 - c))
            or 'linear' (every pair contributes -c)

    Returns:
        Scalar node: mean over the 2B rows of the weighted row sums
    """
    if form not in ('log', 'linear'):
        raise ValueError(f"form must be 'log' or 'linear', got '{form}'")
    graph = _graph_of(Q1, Q2, Z1, Z2)
    Q1, Q2, Z1, Z2 = (_node(graph, v) for v in (Q1, Q2, Z1, Z2))
    shapes = [Q1.shape, Q2.shape, Z1.shape, Z2.shape]
    if len(set(shapes)) != 1 or len(Q1.shape) != 2:
        raise ShapeError('batch_ctr_objective', shapes, "Q1, Q2, Z1, Z2 must share one B x D shape")
    batch = Q1.shape[0]
    if W.size != batch:
        raise ShapeError('batch_ctr_objective', shapes + [W.matrix.shape], "weights must be B x B")

    lo, hi = -1.0 + clamp_margin, 1.0 - clamp_margin
    eye = graph.constant(np.eye(batch), name='same_image')
    off = graph.constant(1.0 - np.eye(batch), name='cross_image')
    weights = graph.constant(W.matrix, name='pair_weights')

    weighted = []
    for Q, Z in ((Q1, Z2), (Q2, Z1)):
        Z_hat = graph.normalize(graph.stop_gradient(Z))
        C = graph.clamp(graph.matmul(graph.normalize(Q), graph.transpose(Z_hat)), lo, hi)
        if form == 'log':
            cross = graph.mul(graph.log(graph.affine(C, scale=-1.0, shift=1.0)), off)
            terms = graph.sub(cross, graph.mul(C, eye))
        else:
            terms = graph.affine(C, scale=-1.0)
        weighted.append(graph.sum(graph.mul(terms, weights)))

    return graph.affine(graph.add(weighted[0], weighted[1]), scale=1.0 / (2 * batch))


def regularizer_weights(config: LossConfig, P: ArrayLike, labels: Optional[ArrayLike] = None) -> PairWeights:
    """Pair weights for the configured regularizer"""
    if config.regularizer == 'label':
        if labels is None:
            raise ConfigError("the 'label' regularizer needs labels")
        return label_weights(labels)
    return confidence_weights(P, config.tau)


def regularizer_form(config: LossConfig) -> str:
    return 'log' if config.regularizer == 'ctrr' else 'linear'


def describe(config: LossConfig) -> Dict:
    return {'lambda': config.lam, 'tau': config.tau, 'clamp_margin': config.clamp_margin,
            'regularizer': config.regularizer}
