"""
Linear probe on a frozen encoder

The classifier head is re-initialised and trained with CE on the observed
labels while the encoder and predictor stay bitwise unchanged.
"""

from typing import Optional, Tuple

from src.data.synthetic import Dataset
from src.model.arch import ModelParams, init_classifier
from src.training.config import TrainConfig
from src.training.trainer import RunMetrics, derive_seed, train_run
from src.utils.errors import ConfigError
from src.utils.logger import setup_logger

logger = setup_logger('probe')

PROBE_STREAM = 3


def probe_parameter_ratio(params: ModelParams, dataset: Dataset) -> float:
    """Classifier parameter count divided by the number of training samples"""
    return params.param_count('classifier') / dataset.size


def linear_probe(frozen_params: ModelParams, dataset: Dataset, probe_cfg: TrainConfig,
                 test_set: Optional[Dataset] = None,
                 max_ratio: float = 1.0) -> Tuple[ModelParams, RunMetrics]:
    """
    Re-initialise g and train it alone on the dataset's noisy labels

    Args:
        frozen_params: trained encoder/predictor (classifier is replaced)
        dataset: training data with noisy labels
        probe_cfg: SGD settings; λ is ignored, only CE is optimised
        test_set: held-out data for test accuracy
        max_ratio: upper bound on classifier parameters per sample

    Returns:
        (params with the trained classifier, RunMetrics)

    Raises:
        ConfigError: the probe is not under-parameterised
    """
    ratio = probe_parameter_ratio(frozen_params, dataset)
    if ratio >= max_ratio:
        raise ConfigError(f"probe parameter/sample ratio {ratio:.3f} must be below {max_ratio}")
    logger.info(f"Linear probe: {frozen_params.param_count('classifier')} parameters, "
                f"{dataset.size} samples (ratio {ratio:.3f})")

    head = init_classifier(frozen_params.spec, derive_seed(probe_cfg.seed, PROBE_STREAM))
    start = frozen_params.replace(classifier=head)
    return train_run(probe_cfg, dataset, frozen_params.spec, test_set=test_set, init=start,
                     trainable=('classifier',), include_contrastive=False)
