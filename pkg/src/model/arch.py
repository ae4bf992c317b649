"""
Architecture spec and parameter containers

Layout of the network stack:
    f = projection . backbone      (encoder, produces z)
    h = prediction MLP             (predictor, produces q)
    g = softmax . linear . backbone (classifier, produces p)

Weights are stored (fan_in, fan_out) so a layer is x @ W + b.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.config.settings import ArchPresets
from src.numeric.tensor import Tensor
from src.utils.errors import ConfigError

PROJECTION_LAYERS = 3
PREDICTION_LAYERS = 2


@dataclass(frozen=True)
class ArchSpec:
    """
    Layer widths of the encoder/predictor/classifier stack

    Attributes:
        input_dim: feature dimension d
        backbone_widths: hidden widths of the backbone (ReLU after each)
        projection_widths: widths of the 3-layer projection MLP
        prediction_widths: widths of the 2-layer prediction MLP
        num_classes: K
    """
    input_dim: int
    backbone_widths: Tuple[int, ...]
    projection_widths: Tuple[int, ...]
    prediction_widths: Tuple[int, ...]
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, 'backbone_widths', tuple(int(w) for w in self.backbone_widths))
        object.__setattr__(self, 'projection_widths', tuple(int(w) for w in self.projection_widths))
        object.__setattr__(self, 'prediction_widths', tuple(int(w) for w in self.prediction_widths))
        self.validate()

    def validate(self):
        """
        Raises:
            ConfigError: topology or widths are invalid
        """
        if len(self.backbone_widths) < 1:
            raise ConfigError("backbone needs at least one layer")
        if len(self.projection_widths) != PROJECTION_LAYERS:
            raise ConfigError(f"projection MLP must have exactly {PROJECTION_LAYERS} layers, "
                              f"got {len(self.projection_widths)}")
        if len(self.prediction_widths) != PREDICTION_LAYERS:
            raise ConfigError(f"prediction MLP must have exactly {PREDICTION_LAYERS} layers, "
                              f"got {len(self.prediction_widths)}")
        widths = [self.input_dim, self.num_classes, *self.backbone_widths,
                  *self.projection_widths, *self.prediction_widths]
        if any(w < 1 for w in widths):
            raise ConfigError(f"all widths must be >= 1, got {widths}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.prediction_widths[-1] != self.projection_widths[-1]:
            raise ConfigError(
                f"last prediction width {self.prediction_widths[-1]} must equal "
                f"last projection width {self.projection_widths[-1]}"
            )

    @property
    def representation_dim(self) -> int:
        return self.projection_widths[-1]

    @property
    def feature_dim(self) -> int:
        """Backbone output width (classifier input)"""
        return self.backbone_widths[-1]

    def encoder_layers(self) -> List[Tuple[int, int]]:
        dims = [self.input_dim, *self.backbone_widths, *self.projection_widths]
        return list(zip(dims[:-1], dims[1:]))

    def predictor_layers(self) -> List[Tuple[int, int]]:
        dims = [self.projection_widths[-1], *self.prediction_widths]
        return list(zip(dims[:-1], dims[1:]))

    def classifier_layers(self) -> List[Tuple[int, int]]:
        return [(self.feature_dim, self.num_classes)]

    def to_dict(self) -> Dict:
        return {
            'input_dim': self.input_dim,
            'backbone_widths': list(self.backbone_widths),
            'projection_widths': list(self.projection_widths),
            'prediction_widths': list(self.prediction_widths),
            'num_classes': self.num_classes,
        }

    @classmethod
    def from_dict(cls, document: Dict) -> 'ArchSpec':
        allowed = {'input_dim', 'backbone_widths', 'projection_widths', 'prediction_widths', 'num_classes'}
        unknown = set(document) - allowed
        if unknown:
            raise ConfigError(f"unknown architecture keys: {sorted(unknown)}")
        missing = allowed - set(document)
        if missing:
            raise ConfigError(f"missing architecture keys: {sorted(missing)}")
        return cls(**document)

    @classmethod
    def from_preset(cls, name: str, input_dim: int, num_classes: int) -> 'ArchSpec':
        try:
            widths = ArchPresets.get(name)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(input_dim=input_dim, num_classes=num_classes, **widths)


@dataclass(frozen=True)
class ModelParams:
    """
    Weight/bias tensors of f, h and g, each list ordered [W1, b1, W2, b2, ...]
    """
    spec: ArchSpec
    encoder_params: Tuple[Tensor, ...]
    predictor_params: Tuple[Tensor, ...]
    classifier_params: Tuple[Tensor, ...]

    def __post_init__(self):
        for group, layers in (('encoder', self.spec.encoder_layers()),
                              ('predictor', self.spec.predictor_layers()),
                              ('classifier', self.spec.classifier_layers())):
            tensors = getattr(self, f"{group}_params")
            object.__setattr__(self, f"{group}_params", tuple(tensors))
            expected = [shape for fan_in, fan_out in layers for shape in ((fan_in, fan_out), (fan_out,))]
            actual = [t.shape for t in tensors]
            if actual != expected:
                raise ConfigError(f"{group} parameter shapes {actual} do not match spec {expected}")

    @property
    def backbone_params(self) -> Tuple[Tensor, ...]:
        return self.encoder_params[:2 * len(self.spec.backbone_widths)]

    @property
    def projection_params(self) -> Tuple[Tensor, ...]:
        return self.encoder_params[2 * len(self.spec.backbone_widths):]

    def groups(self) -> Dict[str, Tuple[Tensor, ...]]:
        return {
            'encoder': self.encoder_params,
            'predictor': self.predictor_params,
            'classifier': self.classifier_params,
        }

    def named_tensors(self) -> List[Tuple[str, Tensor]]:
        """Stable (name, tensor) listing, e.g. ('encoder.W0', ...)"""
        named = []
        for group, tensors in self.groups().items():
            for i, tensor in enumerate(tensors):
                kind = 'W' if i % 2 == 0 else 'b'
                named.append((f"{group}.{kind}{i // 2}", tensor))
        return named

    def replace(self, **groups: Sequence[Tensor]) -> 'ModelParams':
        current = self.groups()
        current.update({k: tuple(v) for k, v in groups.items()})
        return ModelParams(self.spec, current['encoder'], current['predictor'], current['classifier'])

    def param_count(self, group: str = None) -> int:
        tensors = self.groups()[group] if group else [t for _, t in self.named_tensors()]
        return int(sum(t.size for t in tensors))


def _glorot_layers(layers: List[Tuple[int, int]], rng: np.random.Generator) -> List[Tensor]:
    tensors = []
    for fan_in, fan_out in layers:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        tensors.append(Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out))))
        tensors.append(Tensor(np.zeros(fan_out)))
    return tensors


def init_params(spec: ArchSpec, seed: int) -> ModelParams:
    """
    Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases

    Args:
        spec: validated architecture
        seed: 64-bit seed; identical seeds give bitwise-identical parameters

    Returns:
        ModelParams
    """
    rng = np.random.default_rng(seed)
    encoder = _glorot_layers(spec.encoder_layers(), rng)
    predictor = _glorot_layers(spec.predictor_layers(), rng)
    classifier = _glorot_layers(spec.classifier_layers(), rng)
    return ModelParams(spec, tuple(encoder), tuple(predictor), tuple(classifier))


def init_classifier(spec: ArchSpec, seed: int) -> Tuple[Tensor, ...]:
    """Fresh classifier head (used when re-initialising g for a linear probe)"""
    return tuple(_glorot_layers(spec.classifier_layers(), np.random.default_rng(seed)))


def flatten_params(params: ModelParams) -> np.ndarray:
    """Concatenate every parameter (encoder, predictor, classifier order) into one vector"""
    return np.concatenate([t.data.reshape(-1) for _, t in params.named_tensors()])


def unflatten_params(spec: ArchSpec, flat: np.ndarray) -> ModelParams:
    """Inverse of flatten_params"""
    flat = np.asarray(flat, dtype=np.float64).reshape(-1)
    offset = 0
    groups = {}
    for group, layers in (('encoder', spec.encoder_layers()),
                          ('predictor', spec.predictor_layers()),
                          ('classifier', spec.classifier_layers())):
        tensors = []
        for fan_in, fan_out in layers:
            for shape in ((fan_in, fan_out), (fan_out,)):
                size = int(np.prod(shape))
                tensors.append(Tensor(flat[offset:offset + size].reshape(shape)))
                offset += size
        groups[group] = tuple(tensors)
    if offset != flat.size:
        raise ConfigError(f"flat parameter vector has {flat.size} entries, spec needs {offset}")
    return ModelParams(spec, groups['encoder'], groups['predictor'], groups['classifier'])
