"""
Cross-entropy and the total objective
"""

from typing import Union

import numpy as np

from src.numeric.graph import NodeRef
from src.numeric.tensor import ArrayLike, as_array
from src.utils.errors import CTRRError, ShapeError

LABEL_ROW_TOLERANCE = 1e-9


def one_hot(labels: ArrayLike, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]")
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _label_matrix(labels: ArrayLike, shape) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        arr = one_hot(arr, shape[1])
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape != tuple(shape):
        raise ShapeError('cross_entropy', [tuple(shape), arr.shape], "labels must match P")
    row_sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > LABEL_ROW_TOLERANCE)
    if bad.size:
        raise CTRRError(f"cross_entropy: label rows {bad[:8].tolist()} do not sum to 1 "
                        f"(sums {row_sums[bad[:8]].tolist()})")
    return arr


def cross_entropy(P: NodeRef, labels: ArrayLike) -> NodeRef:
    """
    Mean over the batch of -sum_i y_i log p_i

    Args:
        P: clamped probability node (B x K)
        labels: hard labels (B ints) or soft label rows (B x K, rows sum to 1)

    Returns:
        Scalar node
    """
    graph = P.graph
    Y = graph.constant(_label_matrix(labels, P.shape), name='labels')
    nll = graph.sum(graph.mul(graph.log(P), Y))
    return graph.affine(nll, scale=-1.0 / P.shape[0])


def per_sample_cross_entropy(P: ArrayLike, labels: ArrayLike) -> np.ndarray:
    """Per-row -sum_i y_i log p_i on detached values"""
    P = as_array(P)
    Y = _label_matrix(labels, P.shape)
    return -np.sum(Y * np.log(P), axis=1)


def total_objective(ce: Union[NodeRef, float], ctr: Union[NodeRef, float], lam: float) -> Union[NodeRef, float]:
    """ce + λ · ctr"""
    if isinstance(ce, NodeRef):
        graph = ce.graph
        ctr = ctr if isinstance(ctr, NodeRef) else graph.constant(float(ctr))
        return graph.add(ce, graph.affine(ctr, scale=float(lam)))
    return float(ce) + float(lam) * float(ctr)
