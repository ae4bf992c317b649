"""
Desk-scale experiments on Gaussian blobs

Every runner returns a pandas DataFrame with one row per (seed, setting);
`medians` collapses it to one row per setting.
"""

from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from src.data.noise import inject_symmetric
from src.data.synthetic import Dataset, gen_blobs, train_test_split
from src.model.arch import ArchSpec
from src.training.config import TrainConfig
from src.training.metrics import representation_cosines
from src.training.probe import linear_probe
from src.training.trainer import train_run
from src.utils.errors import TrainingDivergedError
from src.utils.logger import setup_logger

logger = setup_logger('experiments')

DESK_BLOBS = {'classes': 4, 'per_class': 500, 'dim': 20, 'spread': 1.0}


def desk_split(seed: int, blobs: Optional[Dict] = None, test_fraction: float = 0.2):
    """Blobs for one seed, split into (train, test)"""
    blobs = {**DESK_BLOBS, **(blobs or {})}
    dataset = gen_blobs(blobs['classes'], blobs['per_class'], blobs['dim'], blobs['spread'], seed)
    return train_test_split(dataset, test_fraction, seed)


def run_once(cfg: TrainConfig, train: Dataset, test: Dataset, arch_preset: str = 'desk') -> Dict:
    """Train once; diverged runs are reported with NaN metrics"""
    arch = ArchSpec.from_preset(arch_preset, train.dim, train.num_classes)
    try:
        _, metrics = train_run(cfg, train, arch, test_set=test)
    except TrainingDivergedError as exc:
        logger.warning(f"run diverged (λ={cfg.lam}, τ={cfg.tau}, seed={cfg.seed}): {exc}")
        return {'final_test_accuracy': np.nan, 'best_test_accuracy': np.nan,
                'final_memorization': np.nan, 'diverged': True}
    summary = metrics.summary()
    return {
        'final_test_accuracy': summary['final']['test_accuracy'],
        'best_test_accuracy': summary['best_test_accuracy'],
        'final_memorization': summary['final']['memorization'],
        'diverged': False,
    }


def _sweep(settings: Dict[str, TrainConfig], seeds: Iterable[int], rate: float,
           blobs: Optional[Dict] = None) -> pd.DataFrame:
    rows = []
    for seed in seeds:
        train, test = desk_split(seed, blobs)
        noisy = inject_symmetric(train, rate, seed)
        for name, cfg in settings.items():
            logger.info(f"seed={seed} setting={name} noise={rate}")
            rows.append({'seed': seed, 'setting': name, **run_once(cfg.with_updates(seed=seed), noisy, test)})
    return pd.DataFrame(rows)


def noise_robustness(seeds: Sequence[int] = (1, 2, 3, 4, 5), rate: float = 0.4,
                     base: Optional[TrainConfig] = None, blobs: Optional[Dict] = None) -> pd.DataFrame:
    """CTRR (λ=50, τ=0.4) against the λ=0 cross-entropy baseline"""
    base = base or TrainConfig()
    return _sweep({'ctrr': base, 'ce': base.with_updates(lam=0.0)}, seeds, rate, blobs)


def lambda_ablation(lams: Sequence[float] = (0.0, 50.0, 5000.0), seeds: Sequence[int] = (1, 2, 3),
                    rate: float = 0.6, base: Optional[TrainConfig] = None,
                    blobs: Optional[Dict] = None) -> pd.DataFrame:
    base = base or TrainConfig()
    return _sweep({f"lambda={lam:g}": base.with_updates(lam=float(lam)) for lam in lams}, seeds, rate, blobs)


def tau_ablation(taus: Sequence[float] = (0.0, 0.4), seeds: Sequence[int] = (1, 2, 3),
                 rate: float = 0.6, base: Optional[TrainConfig] = None,
                 blobs: Optional[Dict] = None) -> pd.DataFrame:
    base = base or TrainConfig()
    return _sweep({f"tau={tau:g}": base.with_updates(tau=float(tau)) for tau in taus}, seeds, rate, blobs)


def regularizer_ablation(seeds: Sequence[int] = (1, 2, 3, 4, 5), rate: float = 0.6,
                         base: Optional[TrainConfig] = None, blobs: Optional[Dict] = None) -> pd.DataFrame:
    """Log-form regularizer against the thresholded linear form"""
    base = base or TrainConfig()
    return _sweep({'ctrr': base, 'linear': base.with_updates(regularizer='linear')}, seeds, rate, blobs)


def clean_clusters(seeds: Sequence[int] = (1, 2, 3), base: Optional[TrainConfig] = None,
                   blobs: Optional[Dict] = None) -> pd.DataFrame:
    """
    Label-indicator regularizer on clean labels; within/between-class cosine
    of the representation on the training set after the final epoch
    """
    base = (base or TrainConfig()).with_updates(regularizer='label')
    rows = []
    for seed in seeds:
        train, test = desk_split(seed, blobs)
        arch = ArchSpec.from_preset('desk', train.dim, train.num_classes)
        params, metrics = train_run(base.with_updates(seed=seed), train, arch, test_set=test)
        within, between = representation_cosines(params, train.features, train.true_labels)
        rows.append({'seed': seed, 'within_cosine': within, 'between_cosine': between,
                     'final_test_accuracy': metrics.final['test_accuracy']})
    return pd.DataFrame(rows)


def memorization_probe(seeds: Sequence[int] = (1, 2, 3, 4, 5), rate: float = 0.4,
                       base: Optional[TrainConfig] = None, probe: Optional[TrainConfig] = None,
                       blobs: Optional[Dict] = None) -> pd.DataFrame:
    """
    Representations trained on clean labels (label-indicator regularizer vs
    plain CE), then a fresh linear head fitted on noisy labels
    """
    base = base or TrainConfig()
    probe = probe or TrainConfig(lam=0.0)
    pretrain = {'ctr': base.with_updates(regularizer='label'), 'ce': base.with_updates(lam=0.0)}
    rows = []
    for seed in seeds:
        train, test = desk_split(seed, blobs)
        noisy = inject_symmetric(train, rate, seed)
        arch = ArchSpec.from_preset('desk', train.dim, train.num_classes)
        for name, cfg in pretrain.items():
            params, _ = train_run(cfg.with_updates(seed=seed), train, arch, test_set=test)
            _, metrics = linear_probe(params, noisy, probe.with_updates(seed=seed), test_set=test)
            rows.append({'seed': seed, 'setting': name,
                         'final_memorization': metrics.final['memorization'],
                         'final_test_accuracy': metrics.final['test_accuracy']})
    return pd.DataFrame(rows)


def medians(frame: pd.DataFrame, by: str = 'setting') -> pd.DataFrame:
    """Median of every numeric column per setting"""
    numeric = frame.drop(columns=['seed']).select_dtypes(include='number')
    return numeric.groupby(frame[by]).median()
