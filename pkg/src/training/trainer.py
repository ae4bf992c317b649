"""
Training loop

Per epoch, for each shuffled batch: one weak and two strong views are drawn,
the batch objective is recorded and differentiated, and SGD updates the
trainable parameter groups. Every random stream derives from cfg.seed:
parameter init, batch order (per epoch) and augmentation (per epoch, batch
and view) are independent.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.data.synthetic import Dataset
from src.model.arch import ArchSpec, ModelParams, init_params
from src.model.network import bind_params, predict_labels
from src.numeric.graph import Graph
from src.training.config import TrainConfig
from src.training.metrics import memorization_from_predictions
from src.training.objective import INIT_STREAM, SHUFFLE_STREAM, build_objective, draw_views
from src.training.optimizer import SgdState, sgd_step
from src.utils.errors import ConfigError, NumericError, TrainingDivergedError
from src.utils.io import FLOAT_FORMAT, atomic_open
from src.utils.logger import setup_logger

logger = setup_logger('training')

METRIC_COLUMNS = ['epoch', 'train_loss', 'ce_loss', 'ctr_loss', 'test_accuracy', 'memorization',
                  'clean_train_accuracy']

ALL_GROUPS = ('encoder', 'predictor', 'classifier')


@dataclass
class RunMetrics:
    """
    Per-epoch records, append-only

    memorization is NaN when the training set has no flipped labels;
    test_accuracy is NaN when no test set was given.
    """
    records: List[Dict[str, float]] = field(default_factory=list)

    def append(self, record: Dict[str, float]):
        missing = set(METRIC_COLUMNS) - set(record)
        if missing:
            raise ValueError(f"metric record is missing {sorted(missing)}")
        self.records.append({key: record[key] for key in METRIC_COLUMNS})

    def __len__(self):
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=METRIC_COLUMNS)

    def to_csv_text(self) -> str:
        return self.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')

    def to_csv(self, path: Union[str, Path]):
        with atomic_open(path, 'w') as handle:
            handle.write(self.to_csv_text())

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'RunMetrics':
        missing = set(METRIC_COLUMNS) - set(frame.columns)
        if missing:
            raise ConfigError(f"metrics table is missing columns {sorted(missing)}")
        metrics = cls()
        for row in frame[METRIC_COLUMNS].to_dict(orient='records'):
            row['epoch'] = int(row['epoch'])
            metrics.append(row)
        return metrics

    @property
    def final(self) -> Dict[str, float]:
        return dict(self.records[-1]) if self.records else {}

    def best(self, column: str = 'test_accuracy') -> Dict[str, float]:
        """Record with the highest value in `column` (earliest on ties, NaN ignored)"""
        frame = self.to_frame()
        values = frame[column]
        if values.isna().all():
            return {}
        return frame.loc[values.idxmax()].to_dict()

    def summary(self) -> Dict:
        best = self.best()
        return {
            'epochs': len(self.records),
            'final': self.final,
            'best_epoch': int(best['epoch']) if best else None,
            'best_test_accuracy': best.get('test_accuracy') if best else None,
        }


def derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, dtype=np.uint64)[0])


def batch_indices(n: int, batch_size: int, seed: int, epoch: int) -> List[np.ndarray]:
    """
    Shuffled batches of one epoch; a trailing batch with fewer than 2 rows is
    dropped because the regularizer needs pairs
    """
    order = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(SHUFFLE_STREAM, epoch))).permutation(n)
    batches = [order[start:start + batch_size] for start in range(0, n, batch_size)]
    return [b for b in batches if b.size >= 2]


def evaluate_epoch(params: ModelParams, dataset: Dataset, test_set: Optional[Dataset]) -> Dict[str, float]:
    train_pred = predict_labels(params, dataset.features)
    record = {
        'clean_train_accuracy': float(np.mean(train_pred == dataset.true_labels)),
        'memorization': (memorization_from_predictions(train_pred, dataset)
                         if dataset.flipped_mask.any() else float('nan')),
        'test_accuracy': float('nan'),
    }
    if test_set is not None and test_set.size:
        record['test_accuracy'] = float(np.mean(predict_labels(params, test_set.features) == test_set.true_labels))
    return record


def train_run(cfg: TrainConfig, dataset: Dataset, arch: ArchSpec,
              test_set: Optional[Dataset] = None,
              init: Optional[ModelParams] = None,
              trainable: Sequence[str] = ALL_GROUPS,
              include_contrastive: bool = True) -> Tuple[ModelParams, RunMetrics]:
    """
    Train on the dataset's observed (noisy) labels

    Args:
        cfg: hyperparameters and seed
        dataset: training data
        arch: network topology
        test_set: held-out data scored against true labels each epoch
        init: starting parameters (fresh Glorot init from cfg.seed when omitted)
        trainable: parameter groups updated by SGD; the rest stay bitwise fixed
        include_contrastive: False trains on the CE term alone

    Returns:
        (final params, RunMetrics)

    Raises:
        TrainingDivergedError: a loss or gradient became non-finite
    """
    if dataset.dim != arch.input_dim or dataset.num_classes != arch.num_classes:
        raise ConfigError(f"dataset (d={dataset.dim}, K={dataset.num_classes}) does not match "
                          f"arch (d={arch.input_dim}, K={arch.num_classes})")
    if dataset.size < 2:
        raise ConfigError("training needs at least 2 rows")
    unknown = set(trainable) - set(ALL_GROUPS)
    if unknown or not trainable:
        raise ConfigError(f"trainable groups must be a non-empty subset of {ALL_GROUPS}, got {list(trainable)}")

    params = init if init is not None else init_params(arch, derive_seed(cfg.seed, INIT_STREAM))
    if params.spec != arch:
        raise ConfigError("initial parameters were built for a different architecture")
    state = SgdState.zeros_like(params)
    loss_cfg = cfg.loss_config()
    metrics = RunMetrics()

    logger.info(f"Training N={dataset.size} K={dataset.num_classes} for {cfg.epochs} epochs "
                f"(λ={cfg.lam}, τ={cfg.tau}, regularizer={cfg.regularizer}, groups={list(trainable)})")

    for epoch in range(1, cfg.epochs + 1):
        correct = cfg.correction_active(epoch)
        totals, ces, ctrs = [], [], []
        for batch_no, rows in enumerate(batch_indices(dataset.size, cfg.batch_size, cfg.seed, epoch)):
            views = draw_views(dataset.features[rows], cfg.seed, epoch, batch_no)
            try:
                graph = Graph()
                bound = bind_params(graph, params, trainable=trainable)
                terms = build_objective(graph, bound, views, dataset.noisy_labels[rows], loss_cfg,
                                        correct=correct, include_contrastive=include_contrastive)
                graph.backward(terms.total)
            except NumericError as exc:
                raise TrainingDivergedError(f"non-finite objective: {exc}", epoch=epoch, batch=batch_no) from exc
            if terms.dropped_rows:
                logger.debug(f"epoch {epoch} batch {batch_no}: {terms.dropped_rows} collapsed row(s) "
                             f"left out of the pair sums")

            grads = {group: [graph.grad(ref) for ref in refs]
                     for group, refs in bound.groups().items() if group in trainable}
            try:
                params, state = sgd_step(params, grads, state, cfg)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(str(exc), epoch=epoch, batch=batch_no) from exc

            total, ce, ctr = terms.total.value.item(), terms.ce.value.item(), terms.ctr.value.item()
            if not all(math.isfinite(v) for v in (total, ce, ctr)):
                raise TrainingDivergedError("non-finite loss", epoch=epoch, batch=batch_no)
            totals.append(total)
            ces.append(ce)
            ctrs.append(ctr)
            logger.debug(f"epoch {epoch} batch {batch_no}: loss={total:.6f} ce={ce:.6f} ctr={ctr:.6f}")

        record = {'epoch': epoch, 'train_loss': float(np.mean(totals)), 'ce_loss': float(np.mean(ces)),
                  'ctr_loss': float(np.mean(ctrs))}
        record.update(evaluate_epoch(params, dataset, test_set))
        metrics.append(record)
        logger.info(f"Epoch {epoch}/{cfg.epochs}: loss={record['train_loss']:.4f} ce={record['ce_loss']:.4f} "
                    f"ctr={record['ctr_loss']:.4f} test_acc={record['test_accuracy']:.4f} "
                    f"mem={record['memorization']:.4f}{' (label correction)' if correct else ''}")

    logger.info(f"✓ Training finished: final test accuracy {metrics.final['test_accuracy']:.4f}")
    return params, metrics
