"""
Run orchestration: data preparation, training/probing and run artifacts

Artifacts of a run directory:
    metrics.csv      one row per epoch, fixed column order
    summary.json     final/best metrics, resolved config, dataset content hash
    params.ckpt      trained parameters
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from src.data.noise import inject
from src.data.storage import encode_dataset, load_dataset
from src.data.synthetic import Dataset, gen_blobs, train_test_split
from src.model.arch import ModelParams
from src.model.checkpoint import load_params, save_params
from src.training.config import RunConfig, resolve_arch
from src.training.probe import linear_probe
from src.training.trainer import RunMetrics, train_run
from src.utils.errors import ConfigError
from src.utils.io import file_content_hash, git_blob_hash, write_json_atomic
from src.utils.logger import setup_logger

logger = setup_logger('runner')

METRICS_FILE = 'metrics.csv'
SUMMARY_FILE = 'summary.json'
PARAMS_FILE = 'params.ckpt'
PROBE_METRICS_FILE = 'probe_metrics.csv'
PROBE_SUMMARY_FILE = 'probe_summary.json'


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset
    content_hash: str


@dataclass
class RunResult:
    params: ModelParams
    metrics: RunMetrics
    summary: Dict


def prepare_data(run_cfg: RunConfig) -> PreparedData:
    """
    Load or generate the dataset, split it, and inject noise into the
    training part only (the test part is always scored on true labels)
    """
    if 'path' in run_cfg.data:
        path = Path(run_cfg.data['path'])
        dataset = load_dataset(path)
        content_hash = file_content_hash(path)
    else:
        blobs = run_cfg.data['blobs']
        dataset = gen_blobs(int(blobs['classes']), int(blobs['per_class']), int(blobs['dim']),
                            float(blobs['spread']), int(blobs['seed']))
        content_hash = git_blob_hash(encode_dataset(dataset))

    train, test = train_test_split(dataset, run_cfg.test_fraction, run_cfg.split_seed)
    if run_cfg.noise is not None:
        train = inject(train, run_cfg.noise)
        logger.info(f"Injected {run_cfg.noise.kind} noise r={run_cfg.noise.rate}: "
                    f"{train.flipped_count}/{train.size} training labels flipped")
    return PreparedData(train, test, content_hash)


def _summary(run_cfg: RunConfig, metrics: RunMetrics, data: PreparedData, arch_dict: Dict,
             kind: str) -> Dict:
    summary = metrics.summary()
    summary.update({
        'kind': kind,
        'config': run_cfg.to_dict(),
        'arch': arch_dict,
        'dataset_content_hash': data.content_hash,
        'train_size': data.train.size,
        'test_size': data.test.size,
        'flipped': data.train.flipped_count,
        'noise': data.train.noise_info,
    })
    return summary


def _write_artifacts(out_dir: Optional[str], metrics: RunMetrics, summary: Dict,
                     metrics_file: str, summary_file: str, params: Optional[ModelParams] = None):
    if out_dir is None:
        return
    out = Path(out_dir)
    metrics.to_csv(out / metrics_file)
    write_json_atomic(out / summary_file, summary)
    if params is not None:
        save_params(out / PARAMS_FILE, params)
    logger.info(f"✓ Wrote {metrics_file} and {summary_file} to {out}")


def execute_run(run_cfg: RunConfig) -> RunResult:
    """Train per the run config and write its artifacts when out_dir is set"""
    data = prepare_data(run_cfg)
    arch = resolve_arch(run_cfg.arch, data.train.dim, data.train.num_classes)
    params, metrics = train_run(run_cfg.train, data.train, arch, test_set=data.test)
    summary = _summary(run_cfg, metrics, data, arch.to_dict(), 'train')
    _write_artifacts(run_cfg.out_dir, metrics, summary, METRICS_FILE, SUMMARY_FILE, params)
    return RunResult(params, metrics, summary)


def execute_probe(run_cfg: RunConfig) -> Tuple[RunResult, ModelParams]:
    """
    Linear probe on the checkpoint named by the run config

    Returns:
        (probe result, the frozen parameters as loaded)
    """
    if run_cfg.checkpoint is None:
        raise ConfigError("probe needs a 'checkpoint' entry in the run config")
    frozen = load_params(run_cfg.checkpoint)
    data = prepare_data(run_cfg)
    probe_cfg = run_cfg.probe or run_cfg.train
    params, metrics = linear_probe(frozen, data.train, probe_cfg, test_set=data.test)
    summary = _summary(run_cfg, metrics, data, frozen.spec.to_dict(), 'probe')
    summary['probe_parameter_count'] = frozen.param_count('classifier')
    _write_artifacts(run_cfg.out_dir, metrics, summary, PROBE_METRICS_FILE, PROBE_SUMMARY_FILE)
    return RunResult(params, metrics, summary), frozen
