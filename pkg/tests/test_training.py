"""
Tests for SGD, the training loop, metrics, linear probe, run artifacts and
the desk-scale experiments
"""

import json

import numpy as np
import pytest

from src.data import gen_blobs, inject_symmetric, train_test_split
from src.losses.contrastive import LossConfig
from src.model import init_params
from src.model.arch import flatten_params, unflatten_params
from src.model.network import bind_params
from src.numeric.graph import Graph
from src.training.config import RunConfig, TrainConfig, resolve_arch
from src.training.experiments import (
    clean_clusters,
    lambda_ablation,
    medians,
    memorization_probe,
    noise_robustness,
    regularizer_ablation,
    tau_ablation,
)
from src.training.metrics import memorization_from_predictions
from src.training.objective import GRADCHECK_ARCH, BatchViews, build_objective, objective_gradcheck
from src.training.optimizer import SgdState, sgd_step, sgd_update
from src.training.probe import linear_probe
from src.training.runner import execute_run
from src.training.trainer import METRIC_COLUMNS, batch_indices, train_run
from src.utils.errors import ConfigError, CTRRError, TrainingDivergedError


@pytest.fixture(scope='module')
def tiny():
    """60 rows of 3-class blobs in 5 dimensions, 40% symmetric noise"""
    ds = gen_blobs(3, 20, 5, 0.5, seed=2)
    return inject_symmetric(ds, 0.4, seed=2)


def tiny_cfg(**changes):
    return TrainConfig(epochs=3, batch_size=16, seed=7).with_updates(**changes)


# ============================================================================
# Optimizer
# ============================================================================

def test_momentum_recurrence():
    theta, velocity = np.zeros(1), np.zeros(1)
    for _ in range(2):
        theta, velocity = sgd_update(theta, np.ones(1), velocity, learning_rate=1.0, momentum=0.9,
                                     weight_decay=0.0)
    assert theta[0] == pytest.approx(-2.9)


def test_weight_decay_enters_the_gradient():
    theta, _ = sgd_update(np.array([2.0]), np.zeros(1), np.zeros(1), 0.5, 0.0, 0.1)
    assert theta[0] == pytest.approx(2.0 - 0.5 * 0.2)


def test_non_finite_gradient_names_the_tensor():
    params = init_params(GRADCHECK_ARCH, seed=0)
    grads = {'encoder': [np.full(t.shape, np.inf) for t in params.encoder_params]}
    with pytest.raises(TrainingDivergedError, match='encoder.W0'):
        sgd_step(params, grads, SgdState.zeros_like(params), TrainConfig())


def test_sgd_step_leaves_other_groups_untouched():
    params = init_params(GRADCHECK_ARCH, seed=0)
    grads = {'classifier': [np.ones(t.shape) for t in params.classifier_params]}
    updated, _ = sgd_step(params, grads, SgdState.zeros_like(params), TrainConfig())
    for before, after in zip(params.encoder_params, updated.encoder_params):
        assert before.data.tobytes() == after.data.tobytes()
    assert not np.array_equal(params.classifier_params[0].data, updated.classifier_params[0].data)


# ============================================================================
# Training loop
# ============================================================================

def test_trailing_single_row_batch_is_dropped():
    batches = batch_indices(5, 2, seed=0, epoch=1)
    assert [b.size for b in batches] == [2, 2]
    assert len(set(np.concatenate(batches).tolist())) == 4


def test_batches_cover_every_row_when_sizes_divide():
    batches = batch_indices(12, 4, seed=3, epoch=2)
    assert sorted(np.concatenate(batches).tolist()) == list(range(12))


def test_train_run_records_every_epoch(tiny):
    _, metrics = train_run(tiny_cfg(), tiny, GRADCHECK_ARCH)
    frame = metrics.to_frame()
    assert list(frame.columns) == METRIC_COLUMNS
    assert frame['epoch'].tolist() == [1, 2, 3]
    assert np.all(np.isfinite(frame[['train_loss', 'ce_loss', 'ctr_loss']].to_numpy()))
    # no test set given
    assert frame['test_accuracy'].isna().all()
    assert frame['memorization'].between(0, 1).all()


def test_same_config_gives_identical_metrics(tiny):
    _, first = train_run(tiny_cfg(), tiny, GRADCHECK_ARCH)
    _, second = train_run(tiny_cfg(), tiny, GRADCHECK_ARCH)
    assert first.to_csv_text() == second.to_csv_text()


def test_zero_lambda_matches_cross_entropy_only(tiny):
    train, test = train_test_split(tiny, 0.25, seed=0)
    _, with_zero = train_run(tiny_cfg(lam=0.0), train, GRADCHECK_ARCH, test_set=test)
    _, ce_only = train_run(tiny_cfg(), train, GRADCHECK_ARCH, test_set=test, include_contrastive=False)
    columns = ['train_loss', 'ce_loss', 'test_accuracy', 'clean_train_accuracy', 'memorization']
    np.testing.assert_array_equal(with_zero.to_frame()[columns].to_numpy(), ce_only.to_frame()[columns].to_numpy())


def test_label_correction_run_stays_finite(tiny):
    _, metrics = train_run(tiny_cfg(label_correction=True, correction_start_epoch=2), tiny, GRADCHECK_ARCH)
    assert np.all(np.isfinite(metrics.to_frame()['train_loss']))


def test_train_run_rejects_mismatched_arch(tiny):
    with pytest.raises(ConfigError, match='does not match'):
        train_run(tiny_cfg(), gen_blobs(3, 10, 6, 1.0, seed=0), GRADCHECK_ARCH)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=1)
    with pytest.raises(ConfigError):
        TrainConfig(momentum=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(tau=-0.1)


def test_objective_backward_matches_finite_differences():
    audit = objective_gradcheck(instances=100, seed=0)
    assert audit.instances == 100
    assert audit.passed(1e-4)


def nonnegative_params():
    """Weights >= 0 and zero biases: all-negative inputs encode to exactly zero"""
    params = init_params(GRADCHECK_ARCH, 0)
    return unflatten_params(GRADCHECK_ARCH, np.abs(flatten_params(params)))


def record_objective(X, loss_cfg):
    graph = Graph()
    bound = bind_params(graph, nonnegative_params())
    labels = np.arange(X.shape[0]) % GRADCHECK_ARCH.num_classes
    return graph, build_objective(graph, bound, BatchViews(X, X, X), labels, loss_cfg)


def test_collapsed_rows_leave_the_pair_sums():
    X = np.abs(np.random.default_rng(0).normal(size=(4, 5))) + 0.1
    X[0] = -1.0
    graph, terms = record_objective(X, LossConfig(lam=50.0, tau=0.4))
    assert terms.pair_rows.tolist() == [1, 2, 3]
    assert terms.dropped_rows == 1
    assert terms.weights.matrix.shape == (3, 3)
    assert np.isfinite(terms.total.value.item())
    graph.backward(terms.total)


def test_fully_collapsed_batch_contributes_no_regularizer():
    X = -np.ones((4, 5))
    _, terms = record_objective(X, LossConfig(lam=50.0, tau=0.4))
    assert terms.dropped_rows == 4
    assert terms.ctr.value.item() == 0.0
    assert terms.total.value.item() == terms.ce.value.item()


def test_zero_lambda_records_no_contrastive_branch():
    X = np.random.default_rng(1).normal(size=(4, 5))
    graph, terms = record_objective(X, LossConfig(lam=0.0, tau=0.4))
    assert 'normalize' not in {node.op for node in graph.nodes}
    assert terms.ctr.value.item() == 0.0
    assert terms.total is terms.ce


# ============================================================================
# Metrics
# ============================================================================

def test_memorization_extremes(tiny):
    assert memorization_from_predictions(tiny.true_labels, tiny) == 0.0
    assert memorization_from_predictions(tiny.noisy_labels, tiny) == 1.0


def test_memorization_of_random_predictor():
    ds = inject_symmetric(gen_blobs(10, 1000, 2, 1.0, seed=0), 1.0, seed=0)
    predictions = np.random.default_rng(5).integers(0, 10, size=ds.size)
    assert memorization_from_predictions(predictions, ds) == pytest.approx(0.1, abs=0.02)


def test_memorization_needs_flipped_rows():
    with pytest.raises(CTRRError, match='no flipped'):
        memorization_from_predictions(np.zeros(10, dtype=int), gen_blobs(2, 5, 2, 1.0, seed=0))


# ============================================================================
# Linear probe
# ============================================================================

def test_frozen_encoder_fit_keeps_encoder_and_predictor_bits(tiny):
    frozen, _ = train_run(tiny_cfg(epochs=1), tiny, GRADCHECK_ARCH)
    probed, metrics = linear_probe(frozen, tiny, tiny_cfg(lam=0.0, epochs=2))
    for group in ('encoder_params', 'predictor_params'):
        for before, after in zip(getattr(frozen, group), getattr(probed, group)):
            assert before.data.tobytes() == after.data.tobytes()
    assert len(metrics) == 2
    assert (metrics.to_frame()['ctr_loss'] == 0.0).all()


def test_frozen_encoder_fit_must_be_under_parameterised(tiny):
    frozen = init_params(GRADCHECK_ARCH, seed=0)
    with pytest.raises(ConfigError, match='ratio'):
        linear_probe(frozen, tiny.subset(range(10)), tiny_cfg())


# ============================================================================
# Run config and artifacts
# ============================================================================

RUN_DOCUMENT = {
    'data': {'blobs': {'classes': 3, 'per_class': 20, 'dim': 5, 'spread': 0.5, 'seed': 1}},
    'noise': {'kind': 'symmetric', 'rate': 0.4, 'seed': 1},
    'arch': {'backbone_widths': [6], 'projection_widths': [5, 5, 4], 'prediction_widths': [3, 4]},
    'train': {'epochs': 2, 'batch_size': 16, 'seed': 3},
    'out_dir': 'run',
}


@pytest.mark.parametrize('section,document', [
    ('run', {**RUN_DOCUMENT, 'extra': 1}),
    ('train', {**RUN_DOCUMENT, 'train': {'epochs': 2, 'lr': 0.1}}),
    ('noise', {**RUN_DOCUMENT, 'noise': {'kind': 'symmetric', 'rate': 0.4, 'ratio': 1}}),
])
def test_run_config_rejects_unknown_keys(section, document):
    with pytest.raises(ConfigError, match='unknown'):
        RunConfig.from_dict(document)


def test_run_config_resolves_paths_against_its_file(tmp_path):
    path = tmp_path / 'cfg' / 'run.json'
    path.parent.mkdir()
    path.write_text(json.dumps(RUN_DOCUMENT))
    assert RunConfig.load(path).out_dir == str(path.parent / 'run')


def test_resolve_arch_checks_data_agreement():
    with pytest.raises(ConfigError, match='input_dim'):
        resolve_arch({'preset': 'desk', 'input_dim': 7}, input_dim=5, num_classes=3)


def test_run_artifacts_are_byte_identical(tmp_path):
    run_cfg = RunConfig.from_dict(RUN_DOCUMENT, base_dir=tmp_path)
    out = tmp_path / 'run'

    execute_run(run_cfg)
    first = ((out / 'metrics.csv').read_bytes(), (out / 'summary.json').read_bytes())
    execute_run(run_cfg)
    second = ((out / 'metrics.csv').read_bytes(), (out / 'summary.json').read_bytes())

    assert first == second
    assert first[0].startswith(b'epoch,train_loss,ce_loss,ctr_loss,test_accuracy,memorization')
    assert (out / 'params.ckpt').exists()
    summary = json.loads(first[1])
    assert summary['flipped'] == summary['noise']['selected']
    assert summary['epochs'] == 2


# ============================================================================
# Desk-scale experiments (--runslow)
# ============================================================================

@pytest.mark.slow
def test_clean_training_clusters_representations():
    frame = clean_clusters(seeds=(1, 2, 3))
    assert frame['within_cosine'].median() >= 0.99
    assert frame['between_cosine'].median() <= 0.5


@pytest.mark.slow
def test_ctrr_beats_cross_entropy_under_symmetric_noise():
    table = medians(noise_robustness(seeds=(1, 2, 3, 4, 5), rate=0.4))
    assert table.loc['ctrr', 'final_test_accuracy'] >= table.loc['ce', 'final_test_accuracy'] + 0.05
    assert table.loc['ctrr', 'final_memorization'] < table.loc['ce', 'final_memorization']


@pytest.mark.slow
def test_log_form_at_least_matches_linear_form():
    table = medians(regularizer_ablation(seeds=(1, 2, 3, 4, 5), rate=0.6))
    assert table.loc['ctrr', 'final_test_accuracy'] >= table.loc['linear', 'final_test_accuracy']


@pytest.mark.slow
def test_lambda_and_tau_ablation_shapes():
    lam = medians(lambda_ablation(lams=(0.0, 50.0, 5000.0), seeds=(1, 2, 3), rate=0.6))
    assert lam.loc['lambda=0', 'final_test_accuracy'] < lam.loc['lambda=50', 'final_test_accuracy']
    # a setting whose seeds all diverged has no accuracy at all
    accuracy = lam['final_test_accuracy'].fillna(0.0)
    assert accuracy['lambda=5000'] < accuracy['lambda=50']
    tau = medians(tau_ablation(taus=(0.0, 0.4), seeds=(1, 2, 3), rate=0.6))
    assert tau.loc['tau=0', 'final_test_accuracy'] < tau.loc['tau=0.4', 'final_test_accuracy']


def test_memorization_experiment_reports_both_pretraining_settings():
    quick = TrainConfig(epochs=2, batch_size=64)
    frame = memorization_probe(seeds=(1,), rate=0.4, base=quick, probe=quick.with_updates(lam=0.0),
                               blobs={'per_class': 100})
    assert sorted(frame['setting']) == ['ce', 'ctr']
    assert frame['final_memorization'].between(0, 1).all()
    assert frame['final_test_accuracy'].between(0, 1).all()


@pytest.mark.slow
def test_contrastive_representations_resist_memorization():
    table = medians(memorization_probe(seeds=(1, 2, 3, 4, 5), rate=0.4))
    assert table.loc['ctr', 'final_memorization'] < table.loc['ce', 'final_memorization']
