"""
Training and run configuration

A run config is a JSON document:

    {
      "data":  {"path": "train.ctrr"}
               | {"blobs": {"classes": 4, "per_class": 500, "dim": 20, "spread": 0.5, "seed": 1}},
      "noise": {"kind": "symmetric", "rate": 0.4, "seed": 1} | null,
      "arch":  {"preset": "desk"} | {"backbone_widths": [...], "projection_widths": [...],
                                     "prediction_widths": [...]},
      "train": {"lambda": 50, "tau": 0.4, ..., "seed": 1},
      "test_fraction": 0.2,
      "split_seed": 0,
      "out_dir": "runs/example",
      "checkpoint": "runs/example/params.ckpt",   (probe only)
      "probe": {"learning_rate": 0.02, "epochs": 30, ...}  (probe only)
    }

Unknown keys are rejected at every level.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np

from src.config.settings import TrainingDefaults
from src.data.noise import NoiseSpec
from src.losses.contrastive import REGULARIZERS, LossConfig
from src.model.arch import ArchSpec
from src.utils.errors import ConfigError
from src.utils.io import read_json


def _reject_unknown(section: str, document: Mapping, allowed) -> None:
    if not isinstance(document, Mapping):
        raise ConfigError(f"'{section}' must be a JSON object")
    unknown = set(document) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")


@dataclass(frozen=True)
class TrainConfig:
    """
    Attributes:
        lam: regularization strength λ
        tau: confidence threshold τ
        learning_rate: SGD step size (> 0)
        momentum: in [0, 1)
        weight_decay: L2 coefficient added to the gradient
        batch_size: rows per batch (>= 2)
        epochs: passes over the data
        seed: root of every random stream of the run
        label_correction: enable loss-scaled soft labels
        correction_start_epoch: first (1-based) epoch with correction active
        regularizer: 'ctrr', 'linear' or 'label'
        clamp_margin: δ
    """
    lam: float = TrainingDefaults.LAMBDA
    tau: float = TrainingDefaults.TAU
    learning_rate: float = TrainingDefaults.LEARNING_RATE
    momentum: float = TrainingDefaults.MOMENTUM
    weight_decay: float = TrainingDefaults.WEIGHT_DECAY
    batch_size: int = TrainingDefaults.BATCH_SIZE
    epochs: int = TrainingDefaults.EPOCHS
    seed: int = 0
    label_correction: bool = False
    correction_start_epoch: int = TrainingDefaults.CORRECTION_START_EPOCH
    regularizer: str = 'ctrr'
    clamp_margin: float = TrainingDefaults.CLAMP_MARGIN

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if not (np.isfinite(self.weight_decay) and self.weight_decay >= 0):
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.correction_start_epoch < 1:
            raise ConfigError(f"correction_start_epoch must be >= 1, got {self.correction_start_epoch}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        self.loss_config()

    def loss_config(self) -> LossConfig:
        return LossConfig(lam=self.lam, tau=self.tau, clamp_margin=self.clamp_margin, regularizer=self.regularizer)

    def correction_active(self, epoch: int) -> bool:
        return self.label_correction and epoch >= self.correction_start_epoch

    def with_updates(self, **changes) -> 'TrainConfig':
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document['lambda'] = document.pop('lam')
        return document

    @classmethod
    def from_dict(cls, document: Mapping) -> 'TrainConfig':
        keys = {f.name for f in fields(cls)} - {'lam'} | {'lambda'}
        _reject_unknown('train', document, keys)
        values = dict(document)
        if 'lambda' in values:
            values['lam'] = float(values.pop('lambda'))
        for key in ('tau', 'learning_rate', 'momentum', 'weight_decay', 'clamp_margin'):
            if key in values:
                values[key] = float(values[key])
        for key in ('batch_size', 'epochs', 'seed', 'correction_start_epoch'):
            if key in values:
                values[key] = int(values[key])
        if 'label_correction' in values:
            values['label_correction'] = bool(values['label_correction'])
        if values.get('regularizer', 'ctrr') not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}")
        return cls(**values)


ARCH_WIDTH_KEYS = ('backbone_widths', 'projection_widths', 'prediction_widths')
BLOB_KEYS = ('classes', 'per_class', 'dim', 'spread', 'seed')


def resolve_arch(document: Mapping, input_dim: int, num_classes: int) -> ArchSpec:
    """
    ArchSpec from {"preset": name} or explicit widths; input_dim and
    num_classes come from the data and must agree if also given
    """
    _reject_unknown('arch', document, ('preset', 'input_dim', 'num_classes') + ARCH_WIDTH_KEYS)
    for key, actual in (('input_dim', input_dim), ('num_classes', num_classes)):
        if key in document and int(document[key]) != actual:
            raise ConfigError(f"arch.{key}={document[key]} does not match the data ({actual})")
    if 'preset' in document:
        if any(key in document for key in ARCH_WIDTH_KEYS):
            raise ConfigError("arch takes either a preset or explicit widths, not both")
        return ArchSpec.from_preset(document['preset'], input_dim, num_classes)
    missing = [key for key in ARCH_WIDTH_KEYS if key not in document]
    if missing:
        raise ConfigError(f"arch is missing {missing}")
    return ArchSpec(input_dim=input_dim, num_classes=num_classes,
                    **{key: document[key] for key in ARCH_WIDTH_KEYS})


@dataclass(frozen=True)
class RunConfig:
    """Resolved run document (see module docstring)"""
    data: Dict[str, Any]
    train: TrainConfig
    arch: Dict[str, Any] = field(default_factory=lambda: {'preset': 'desk'})
    noise: Optional[NoiseSpec] = None
    test_fraction: float = TrainingDefaults.TEST_FRACTION
    split_seed: int = 0
    out_dir: Optional[str] = None
    checkpoint: Optional[str] = None
    probe: Optional[TrainConfig] = None

    def __post_init__(self):
        _reject_unknown('data', self.data, ('path', 'blobs'))
        if len(self.data) != 1:
            raise ConfigError("'data' needs exactly one of 'path' or 'blobs'")
        if 'blobs' in self.data:
            _reject_unknown('data.blobs', self.data['blobs'], BLOB_KEYS)
            missing = [key for key in BLOB_KEYS if key not in self.data['blobs']]
            if missing:
                raise ConfigError(f"data.blobs is missing {missing}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")

    @classmethod
    def from_dict(cls, document: Mapping, base_dir: Optional[Path] = None) -> 'RunConfig':
        _reject_unknown('run', document, ('data', 'noise', 'arch', 'train', 'test_fraction', 'split_seed',
                                          'out_dir', 'checkpoint', 'probe'))
        if 'data' not in document:
            raise ConfigError("run config needs a 'data' section")
        data = dict(document['data'])
        checkpoint = document.get('checkpoint')
        out_dir = document.get('out_dir')
        if base_dir is not None:
            # relative paths resolve against the config file's directory
            if 'path' in data:
                data['path'] = str(base_dir / data['path'])
            if checkpoint is not None:
                checkpoint = str(base_dir / checkpoint)
            if out_dir is not None:
                out_dir = str(base_dir / out_dir)
        noise = document.get('noise')
        probe = document.get('probe')
        return cls(
            data=data,
            train=TrainConfig.from_dict(document.get('train', {})),
            arch=dict(document.get('arch', {'preset': 'desk'})),
            noise=NoiseSpec.from_dict(noise) if noise is not None else None,
            test_fraction=float(document.get('test_fraction', TrainingDefaults.TEST_FRACTION)),
            split_seed=int(document.get('split_seed', 0)),
            out_dir=out_dir,
            checkpoint=checkpoint,
            probe=TrainConfig.from_dict(probe) if probe is not None else None,
        )

    @classmethod
    def load(cls, path) -> 'RunConfig':
        path = Path(path)
        try:
            document = read_json(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        return cls.from_dict(document, base_dir=path.parent)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'data': self.data,
            'noise': self.noise.to_dict() if self.noise else None,
            'arch': self.arch,
            'train': self.train.to_dict(),
            'test_fraction': self.test_fraction,
            'split_seed': self.split_seed,
            'out_dir': self.out_dir,
            'checkpoint': self.checkpoint,
            'probe': self.probe.to_dict() if self.probe else None,
        }

