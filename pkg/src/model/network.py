"""
Forward passes of the encoder f, predictor h and classifier g

The *_nodes functions record onto a caller-owned Graph (training, gradient
audits); encode / predict_head / classify are the pure evaluations.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.config.settings import TrainingDefaults
from src.model.arch import ModelParams
from src.numeric.graph import Graph, NodeRef
from src.numeric.tensor import Tensor, ArrayLike, as_array
from src.utils.errors import ShapeError


@dataclass
class BoundParams:
    """ModelParams recorded as graph inputs"""
    params: ModelParams
    encoder: List[NodeRef]
    predictor: List[NodeRef]
    classifier: List[NodeRef]

    @property
    def backbone(self) -> List[NodeRef]:
        return self.encoder[:2 * len(self.params.spec.backbone_widths)]

    @property
    def projection(self) -> List[NodeRef]:
        return self.encoder[2 * len(self.params.spec.backbone_widths):]

    def groups(self) -> Dict[str, List[NodeRef]]:
        return {'encoder': self.encoder, 'predictor': self.predictor, 'classifier': self.classifier}


def bind_params(graph: Graph, params: ModelParams, trainable: Sequence[str] = ('encoder', 'predictor', 'classifier')) -> BoundParams:
    """
    Record parameters on a graph

    Groups listed in `trainable` become leaves; the rest are constants and
    receive no gradient (frozen).
    """
    bound = {}
    for group, tensors in params.groups().items():
        refs = []
        for i, tensor in enumerate(tensors):
            name = f"{group}.{'W' if i % 2 == 0 else 'b'}{i // 2}"
            if group in trainable:
                refs.append(graph.leaf(tensor, name=name))
            else:
                refs.append(graph.constant(tensor, name=name))
        bound[group] = refs
    return BoundParams(params, bound['encoder'], bound['predictor'], bound['classifier'])


def _mlp(graph: Graph, x: NodeRef, layers: Sequence[NodeRef], final_relu: bool) -> NodeRef:
    h = x
    n_layers = len(layers) // 2
    for i in range(n_layers):
        h = graph.add(graph.matmul(h, layers[2 * i]), layers[2 * i + 1])
        if i < n_layers - 1 or final_relu:
            h = graph.relu(h)
    return h


def _check_columns(op: str, x: NodeRef, expected: int):
    if len(x.shape) != 2 or x.shape[1] != expected:
        raise ShapeError(op, [x.shape], f"expected a batch with {expected} columns")


def backbone_nodes(graph: Graph, bound: BoundParams, x: NodeRef) -> NodeRef:
    """Backbone features (ReLU after every layer)"""
    _check_columns('backbone', x, bound.params.spec.input_dim)
    return _mlp(graph, x, bound.backbone, final_relu=True)


def encode_nodes(graph: Graph, bound: BoundParams, x: NodeRef) -> NodeRef:
    """z = f(x): backbone then projection MLP with a linear final layer"""
    features = backbone_nodes(graph, bound, x)
    return _mlp(graph, features, bound.projection, final_relu=False)


def predict_nodes(graph: Graph, bound: BoundParams, z: NodeRef) -> NodeRef:
    """q = h(z)"""
    _check_columns('predict_head', z, bound.params.spec.representation_dim)
    return _mlp(graph, z, bound.predictor, final_relu=False)


def logits_nodes(graph: Graph, bound: BoundParams, x: NodeRef) -> NodeRef:
    features = backbone_nodes(graph, bound, x)
    return _mlp(graph, features, bound.classifier, final_relu=False)


def classify_nodes(graph: Graph, bound: BoundParams, x: NodeRef,
                   clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> Tuple[NodeRef, NodeRef]:
    """
    p = clamp(softmax(g(x)), δ, 1 - δ)

    Returns:
        (clamped probabilities, unclamped softmax); rows are not renormalised
        after clamping
    """
    probs = graph.softmax(logits_nodes(graph, bound, x))
    return graph.clamp(probs, clamp_margin, 1.0 - clamp_margin), probs


# ============================================================================
# Pure evaluations
# ============================================================================

def _evaluate(params: ModelParams, X: ArrayLike, fn) -> Tensor:
    graph = Graph()
    bound = bind_params(graph, params, trainable=())
    x = graph.constant(np.atleast_2d(as_array(X)), name='X')
    return fn(graph, bound, x).value


def backbone(params: ModelParams, X: ArrayLike) -> Tensor:
    return _evaluate(params, X, backbone_nodes)


def encode(params: ModelParams, X: ArrayLike) -> Tensor:
    """Z = f(X), one row per input row"""
    return _evaluate(params, X, encode_nodes)


def predict_head(params: ModelParams, Z: ArrayLike) -> Tensor:
    """Q = h(Z)"""
    return _evaluate(params, Z, predict_nodes)


def classify(params: ModelParams, X: ArrayLike,
             clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> Tensor:
    """P = clamped softmax output of g"""
    return _evaluate(params, X, lambda g, b, x: classify_nodes(g, b, x, clamp_margin)[0])


def softmax_outputs(params: ModelParams, X: ArrayLike) -> Tensor:
    """Unclamped softmax rows (sum to 1)"""
    return _evaluate(params, X, lambda g, b, x: classify_nodes(g, b, x)[1])


def predict_labels(params: ModelParams, X: ArrayLike) -> np.ndarray:
    """argmax of the classifier output"""
    return np.argmax(softmax_outputs(params, X).data, axis=1)
