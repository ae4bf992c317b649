"""
Batch objective shared by training, probing and the gradient audit

For one batch:
    Z1, Z2 = f(strong view 1), f(strong view 2)      (stop-gradient inside the regularizer)
    Q1, Q2 = h(Z1), h(Z2)
    P      = clamp(softmax(g(weak view)))
    W      = detached pair weights from P (or from labels)
    total  = CE(P, targets) + λ * batch_ctr_objective(Q1, Q2, Z1, Z2, W)
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.settings import TrainingDefaults
from src.data.augment import AugmentSpec, augment_batch
from src.data.correction import correct_labels
from src.losses.audit import LossGradAudit
from src.losses.classification import cross_entropy, one_hot, per_sample_cross_entropy, total_objective
from src.losses.contrastive import (
    LossConfig,
    PairWeights,
    batch_ctr_objective,
    regularizer_form,
    regularizer_weights,
)
from src.model.arch import ArchSpec, ModelParams, init_params
from src.model.network import BoundParams, classify_nodes, encode_nodes, predict_nodes
from src.numeric.gradcheck import DEFAULT_STEP, check_gradient_leaves
from src.numeric.graph import Graph, NodeRef
from src.numeric.primitives import NORMALIZE_MIN_NORM
from src.utils.errors import CTRRError

# spawn-key prefixes of the run's random streams
INIT_STREAM = 0
SHUFFLE_STREAM = 1
AUGMENT_STREAM = 2

KINK_MARGIN = 1e-4
# finite differences lose accuracy as a row norm approaches zero
COLLAPSE_MARGIN = 1e-3


@dataclass(frozen=True)
class BatchViews:
    weak: np.ndarray
    strong1: np.ndarray
    strong2: np.ndarray


@dataclass
class ObjectiveTerms:
    """
    Recorded terms of one batch

    pair_rows lists the batch rows that entered the regularizer; rows whose
    representation or prediction collapsed to zero are left out of the pair
    sums for that batch. min_norm is the smallest row norm among Z1, Z2,
    Q1 and Q2 (inf when the regularizer was not recorded).
    """
    total: NodeRef
    ce: NodeRef
    ctr: NodeRef
    probs: NodeRef
    softmax: NodeRef
    weights: Optional[PairWeights] = None
    pair_rows: Optional[np.ndarray] = None
    min_norm: float = float('inf')

    @property
    def dropped_rows(self) -> int:
        if self.pair_rows is None:
            return 0
        return int(self.probs.shape[0] - self.pair_rows.size)


def draw_views(X: np.ndarray, seed: int, epoch: int, batch: int,
               weak: Optional[AugmentSpec] = None, strong: Optional[AugmentSpec] = None) -> BatchViews:
    """One weak and two strong views, each from its own derived stream"""
    weak = weak or AugmentSpec.weak()
    strong = strong or AugmentSpec.strong()

    def stream(view: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(seed, spawn_key=(AUGMENT_STREAM, epoch, batch, view))

    return BatchViews(
        weak=augment_batch(X, weak, stream(0)),
        strong1=augment_batch(X, strong, stream(1)),
        strong2=augment_batch(X, strong, stream(2)),
    )


def soft_targets(probs: np.ndarray, softmax: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Loss-scaled corrected labels from detached predictions"""
    losses = per_sample_cross_entropy(probs, labels)
    return correct_labels(one_hot(labels, num_classes), softmax, losses)


def build_objective(graph: Graph, bound: BoundParams, views: BatchViews, labels: np.ndarray,
                    loss_cfg: LossConfig, correct: bool = False,
                    weights: Optional[PairWeights] = None,
                    targets: Optional[np.ndarray] = None,
                    include_contrastive: bool = True) -> ObjectiveTerms:
    """
    Record the batch objective on `graph`

    Args:
        graph: tape owning `bound`
        bound: parameters recorded on the graph
        views: augmented inputs
        labels: observed labels of the batch
        loss_cfg: λ, τ, δ and regularizer choice
        correct: replace hard labels by loss-scaled soft labels
        weights: fixed pair weights (computed from P when omitted)
        targets: fixed CE targets (overrides labels / correction)
        include_contrastive: False records only the CE term (linear probe)

    Returns:
        ObjectiveTerms
    """
    labels = np.asarray(labels, dtype=np.int64)
    num_classes = bound.params.spec.num_classes
    x_weak = graph.constant(views.weak, name='x_weak')
    probs, softmax = classify_nodes(graph, bound, x_weak, loss_cfg.clamp_margin)

    if targets is None:
        targets = soft_targets(probs.value.data, softmax.value.data, labels, num_classes) if correct else labels
    ce = cross_entropy(probs, targets)

    # λ = 0 records exactly the CE-only objective
    if not include_contrastive or loss_cfg.lam == 0.0:
        return ObjectiveTerms(total=ce, ce=ce, ctr=graph.constant(0.0, name='ctr'), probs=probs, softmax=softmax)

    branch = contrastive_branch(graph, bound, views.strong1, views.strong2)
    norms = branch_row_norms(branch)
    rows = np.flatnonzero(norms.min(axis=0) >= NORMALIZE_MIN_NORM)
    min_norm = float(norms.min())

    if rows.size < 2:
        # fewer than two live rows leave no pairs to regularize
        ctr = graph.constant(0.0, name='ctr')
        return ObjectiveTerms(total=total_objective(ce, ctr, loss_cfg.lam), ce=ce, ctr=ctr,
                              probs=probs, softmax=softmax, pair_rows=rows, min_norm=min_norm)

    if weights is None:
        weights = regularizer_weights(loss_cfg, probs.value.data[rows], labels[rows])
    elif rows.size < labels.size:
        weights = restrict_weights(weights, rows)
    if rows.size < labels.size:
        branch = contrastive_branch(graph, bound, views.strong1[rows], views.strong2[rows])

    Z1, Z2, Q1, Q2 = branch
    ctr = batch_ctr_objective(Q1, Q2, Z1, Z2, weights, loss_cfg.clamp_margin, form=regularizer_form(loss_cfg))
    return ObjectiveTerms(total=total_objective(ce, ctr, loss_cfg.lam), ce=ce, ctr=ctr,
                          probs=probs, softmax=softmax, weights=weights, pair_rows=rows, min_norm=min_norm)


def contrastive_branch(graph: Graph, bound: BoundParams, strong1: np.ndarray,
                       strong2: np.ndarray) -> Tuple[NodeRef, NodeRef, NodeRef, NodeRef]:
    """(Z1, Z2, Q1, Q2) for the two strong views"""
    Z1 = encode_nodes(graph, bound, graph.constant(strong1, name='x_strong1'))
    Z2 = encode_nodes(graph, bound, graph.constant(strong2, name='x_strong2'))
    return Z1, Z2, predict_nodes(graph, bound, Z1), predict_nodes(graph, bound, Z2)


def branch_row_norms(branch: Sequence[NodeRef]) -> np.ndarray:
    """4 x B row norms of Z1, Z2, Q1, Q2"""
    return np.stack([np.linalg.norm(node.value.data, axis=1) for node in branch])


def restrict_weights(weights: PairWeights, rows: np.ndarray) -> PairWeights:
    """Pair weights among `rows`, renormalised; diagonals keep every row positive"""
    sub = weights.matrix[np.ix_(rows, rows)]
    return PairWeights(sub / sub.sum(axis=1, keepdims=True))


# ============================================================================
# Full-objective gradient audit
# ============================================================================

GRADCHECK_ARCH = ArchSpec(input_dim=5, backbone_widths=(8,), projection_widths=(8, 8, 6),
                          prediction_widths=(8, 6), num_classes=3)


def bind_leaves(params: ModelParams, leaves: Sequence[NodeRef]) -> BoundParams:
    """BoundParams over leaves ordered like params.named_tensors()"""
    n_enc, n_pred = len(params.encoder_params), len(params.predictor_params)
    leaves = list(leaves)
    return BoundParams(params, leaves[:n_enc], leaves[n_enc:n_enc + n_pred], leaves[n_enc + n_pred:])


def near_kink(graph: Graph, margin: float = KINK_MARGIN) -> bool:
    """
    True if any ReLU input sits within `margin` of 0 or any clamp input
    within `margin` of a clamp bound; central differences are unreliable there
    """
    for node in graph.nodes:
        if node.op not in ('relu', 'clamp'):
            continue
        values = graph.values[node.inputs[0]].data
        if node.op == 'relu' and np.any(np.abs(values) < margin):
            return True
        if node.op == 'clamp':
            bounds = (node.attrs['lo'], node.attrs['hi'])
            if any(np.any(np.abs(values - b) < margin) for b in bounds):
                return True
    return False


def objective_gradcheck(instances: int = 100, seed: int = 0, batch: int = 4,
                        spec: ArchSpec = GRADCHECK_ARCH, coordinates: int = 10,
                        loss_cfg: Optional[LossConfig] = None,
                        step: float = DEFAULT_STEP, max_redraws: int = 50) -> LossGradAudit:
    """
    Gradient of the total objective with respect to every parameter tensor

    Pair weights are computed once at the base point and held fixed, matching
    their detachment during training. Instances whose ReLU or clamp inputs sit
    near a kink, or whose Z or Q rows have norm below COLLAPSE_MARGIN, are
    redrawn.
    """
    loss_cfg = loss_cfg or LossConfig(lam=TrainingDefaults.LAMBDA, tau=TrainingDefaults.TAU)
    rng = np.random.default_rng(seed)
    worst = []
    for _ in range(instances):
        for _attempt in range(max_redraws):
            params = init_params(spec, int(rng.integers(2 ** 63 - 1)))
            views = BatchViews(*rng.normal(size=(3, batch, spec.input_dim)))
            labels = rng.integers(0, spec.num_classes, size=batch)
            graph = Graph()
            bound = bind_leaves(params, [graph.leaf(t) for _, t in params.named_tensors()])
            terms = build_objective(graph, bound, views, labels, loss_cfg)
            if terms.min_norm >= COLLAPSE_MARGIN and not near_kink(graph):
                break
        else:
            raise CTRRError(f"no kink-free, non-collapsed instance found in {max_redraws} draws")

        weights = terms.weights

        def build(g: Graph, leaves, params=params, views=views, labels=labels, weights=weights):
            return build_objective(g, bind_leaves(params, leaves), views, labels, loss_cfg, weights=weights).total

        points = [t.data for _, t in params.named_tensors()]
        total = int(sum(p.size for p in points))
        subset = np.sort(rng.choice(total, size=min(coordinates, total), replace=False))
        report = check_gradient_leaves(build, points, step, coordinates=subset)
        worst.append(report.max_relative_error)
    return LossGradAudit('objective', instances, float(max(worst)) if worst else 0.0, worst)
