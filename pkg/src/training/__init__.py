"""
Training loop, linear probe, metrics and run orchestration
"""

from .config import TrainConfig, RunConfig, resolve_arch
from .optimizer import SgdState, sgd_step, sgd_update
from .metrics import accuracy, memorization, memorization_from_predictions, representation_cosines
from .objective import BatchViews, ObjectiveTerms, build_objective, draw_views, objective_gradcheck
from .trainer import METRIC_COLUMNS, RunMetrics, train_run
from .probe import linear_probe, probe_parameter_ratio
from .runner import RunResult, execute_probe, execute_run, prepare_data

__all__ = [
    'TrainConfig',
    'RunConfig',
    'resolve_arch',
    'SgdState',
    'sgd_step',
    'sgd_update',
    'accuracy',
    'memorization',
    'memorization_from_predictions',
    'representation_cosines',
    'BatchViews',
    'ObjectiveTerms',
    'build_objective',
    'draw_views',
    'objective_gradcheck',
    'METRIC_COLUMNS',
    'RunMetrics',
    'train_run',
    'linear_probe',
    'probe_parameter_ratio',
    'RunResult',
    'execute_probe',
    'execute_run',
    'prepare_data',
]
