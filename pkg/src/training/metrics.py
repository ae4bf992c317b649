"""
Evaluation metrics
"""

from typing import Tuple

import numpy as np

from src.data.synthetic import Dataset
from src.model.arch import ModelParams
from src.model.network import encode, predict_labels
from src.utils.errors import CTRRError


def accuracy(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        return float('nan')
    return float(np.mean(predict_labels(params, features) == labels))


def memorization_from_predictions(predictions: np.ndarray, dataset: Dataset) -> float:
    """
    Fraction of flipped examples predicted as their (wrong) observed label

    Raises:
        CTRRError: the dataset has no flipped examples
    """
    flipped = dataset.flipped_mask
    if not flipped.any():
        raise CTRRError("memorization is undefined: the dataset has no flipped labels")
    predictions = np.asarray(predictions).reshape(-1)
    return float(np.mean(predictions[flipped] == dataset.noisy_labels[flipped]))


def memorization(params: ModelParams, dataset: Dataset) -> float:
    return memorization_from_predictions(predict_labels(params, dataset.features), dataset)


def representation_cosines(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    """
    Mean cosine similarity of z = f(x) over distinct same-class pairs and
    over different-class pairs

    Returns:
        (within_class, between_class); NaN where no such pair exists
    """
    Z = encode(params, features).numpy()
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise CTRRError("representation collapsed to zero for at least one input")
    Z_hat = Z / norms
    cos = Z_hat @ Z_hat.T
    labels = np.asarray(labels).reshape(-1)
    same = labels[:, None] == labels[None, :]
    off_diagonal = ~np.eye(labels.size, dtype=bool)
    within = cos[same & off_diagonal]
    between = cos[~same]
    return (float(within.mean()) if within.size else float('nan'),
            float(between.mean()) if between.size else float('nan'))
