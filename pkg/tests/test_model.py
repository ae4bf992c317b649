"""
Tests for the network stack: spec validation, init, forward passes and
checkpoints
"""

import numpy as np
import pytest

from src.model import (
    ArchSpec,
    bind_params,
    classify,
    encode,
    encode_nodes,
    flatten_params,
    init_params,
    load_params,
    predict_head,
    predict_labels,
    save_params,
    softmax_outputs,
    unflatten_params,
)
from src.numeric import Graph, Tensor, check_gradient
from src.utils.errors import ConfigError, DatasetFormatError, ShapeError

SMALL = dict(input_dim=5, backbone_widths=(6,), projection_widths=(5, 5, 4),
             prediction_widths=(3, 4), num_classes=4)


@pytest.fixture
def spec():
    return ArchSpec(**SMALL)


@pytest.fixture
def params(spec):
    return init_params(spec, seed=1)


def _zeroed(params):
    zero = lambda tensors: tuple(Tensor(np.zeros(t.shape)) for t in tensors)
    return params.replace(encoder=zero(params.encoder_params), classifier=zero(params.classifier_params))


# ============================================================================
# ArchSpec
# ============================================================================

def test_zero_width_rejected():
    with pytest.raises(ConfigError, match='widths'):
        ArchSpec(**{**SMALL, 'backbone_widths': (6, 0)})


def test_projection_needs_three_layers():
    with pytest.raises(ConfigError, match='exactly 3'):
        ArchSpec(**{**SMALL, 'projection_widths': (5, 4)})


def test_prediction_needs_two_layers_ending_at_representation_width():
    with pytest.raises(ConfigError, match='exactly 2'):
        ArchSpec(**{**SMALL, 'prediction_widths': (4,)})
    with pytest.raises(ConfigError, match='must equal'):
        ArchSpec(**{**SMALL, 'prediction_widths': (3, 5)})


def test_desk_preset():
    spec = ArchSpec.from_preset('desk', input_dim=20, num_classes=4)
    assert spec.backbone_widths == (64, 64)
    assert spec.projection_widths == (64, 64, 32)
    assert spec.prediction_widths == (16, 32)
    with pytest.raises(ConfigError, match='Unknown architecture preset'):
        ArchSpec.from_preset('resnet', 20, 4)


# ============================================================================
# init_params
# ============================================================================

def test_same_seed_bitwise_identical(spec):
    a, b = init_params(spec, 7), init_params(spec, 7)
    assert flatten_params(a).tobytes() == flatten_params(b).tobytes()


def test_different_seeds_differ(spec):
    assert np.any(flatten_params(init_params(spec, 1)) != flatten_params(init_params(spec, 2)))


def test_glorot_limits_and_zero_biases(params):
    for name, tensor in params.named_tensors():
        if '.b' in name:
            assert np.all(tensor.data == 0.0)
        else:
            fan_in, fan_out = tensor.shape
            assert np.all(np.abs(tensor.data) <= np.sqrt(6.0 / (fan_in + fan_out)))


def test_flatten_unflatten(spec, params):
    restored = unflatten_params(spec, flatten_params(params))
    assert [t for _, t in restored.named_tensors()] == [t for _, t in params.named_tensors()]


# ============================================================================
# Forward passes
# ============================================================================

def test_zero_weights_give_zero_representation(params):
    Z = encode(_zeroed(params), np.random.default_rng(0).normal(size=(3, 5)))
    np.testing.assert_array_equal(Z.data, np.zeros((3, 4)))


def test_rows_are_independent(params):
    rng = np.random.default_rng(1)
    x0, x1 = rng.normal(size=(2, 5))
    single = encode(params, x0[None, :]).data
    pair = encode(params, np.stack([x0, x1])).data
    # BLAS may block a 1-row and a 2-row product differently
    np.testing.assert_allclose(single[0], pair[0], rtol=0, atol=1e-12)


def test_encode_checks_columns(params):
    with pytest.raises(ShapeError, match='backbone'):
        encode(params, np.ones((2, 4)))


def test_zero_logits_give_uniform_rows(params):
    P = classify(_zeroed(params), np.ones((2, 5)))
    np.testing.assert_allclose(P.data, 0.25)


def test_identity_predictor(spec, params):
    dim = spec.representation_dim
    eye = np.eye(dim)
    # 3 hidden units cannot carry 4 dims; widen the hidden layer to the identity size
    wide = ArchSpec(**{**SMALL, 'prediction_widths': (dim, dim)})
    p = init_params(wide, 3)
    p = p.replace(predictor=(Tensor(eye), Tensor(np.zeros(dim)), Tensor(eye), Tensor(np.zeros(dim))))
    Z = np.abs(np.random.default_rng(2).normal(size=(3, dim)))
    np.testing.assert_allclose(predict_head(p, Z).data, Z)


def test_clamped_rows_within_margin(params):
    X = np.random.default_rng(4).normal(scale=50.0, size=(20, 5))
    P = classify(params, X).data
    assert P.min() >= 1e-4 and P.max() <= 1 - 1e-4
    np.testing.assert_allclose(softmax_outputs(params, X).data.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    # no renormalisation after the clamp
    assert np.all(np.abs(P.sum(axis=1) - 1.0) <= 2 * 4 * 1e-4)


def test_predict_labels_is_argmax(params):
    X = np.random.default_rng(5).normal(size=(10, 5))
    np.testing.assert_array_equal(predict_labels(params, X), np.argmax(classify(params, X).data, axis=1))


def test_encoder_gradient(params):
    rng = np.random.default_rng(6)
    weights = rng.normal(size=(3, 4))
    X = rng.normal(size=(3, 5))

    def build(g, x):
        bound = bind_params(g, params, trainable=())
        return g.sum(g.mul(encode_nodes(g, bound, x), g.constant(weights)))

    assert check_gradient(build, X).passed(1e-4)


def test_frozen_groups_are_constants(params):
    g = Graph()
    bound = bind_params(g, params, trainable=('classifier',))
    assert all(not ref.node.requires_grad for ref in bound.encoder)
    assert all(ref.node.requires_grad for ref in bound.classifier)


# ============================================================================
# Checkpoint
# ============================================================================

def test_checkpoint_restores_bitwise(tmp_path, params):
    path = tmp_path / 'params.ckpt'
    save_params(path, params)
    restored = load_params(path)
    assert restored.spec == params.spec
    assert flatten_params(restored).tobytes() == flatten_params(params).tobytes()


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ConfigError, match='does not exist'):
        load_params(tmp_path / 'absent.ckpt')


def test_truncated_checkpoint(tmp_path, params):
    path = tmp_path / 'params.ckpt'
    save_params(path, params)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(DatasetFormatError, match='past the end'):
        load_params(path)
