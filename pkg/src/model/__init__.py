"""
SimSiam-style network stack: encoder f, predictor h, classifier g
"""

from .arch import (
    ArchSpec,
    ModelParams,
    init_params,
    init_classifier,
    flatten_params,
    unflatten_params,
)
from .network import (
    BoundParams,
    bind_params,
    backbone_nodes,
    encode_nodes,
    predict_nodes,
    classify_nodes,
    backbone,
    encode,
    predict_head,
    classify,
    softmax_outputs,
    predict_labels,
)
from .checkpoint import save_params, load_params, serialize_params, deserialize_params

__all__ = [
    'ArchSpec',
    'ModelParams',
    'init_params',
    'init_classifier',
    'flatten_params',
    'unflatten_params',
    'BoundParams',
    'bind_params',
    'backbone_nodes',
    'encode_nodes',
    'predict_nodes',
    'classify_nodes',
    'backbone',
    'encode',
    'predict_head',
    'classify',
    'softmax_outputs',
    'predict_labels',
    'save_params',
    'load_params',
    'serialize_params',
    'deserialize_params',
]
