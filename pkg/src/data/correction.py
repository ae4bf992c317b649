"""
Loss-scaled label correction

Soft labels are a convex combination of the observed one-hot label and the
model prediction, weighted by each sample's loss scaled into [0, 1] by the
batch maximum. High-loss samples lean on the prediction.
"""

import numpy as np

from src.utils.errors import CTRRError, ShapeError

ROW_TOLERANCE = 1e-9


def _check_rows(name: str, rows: np.ndarray):
    sums = rows.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOLERANCE)
    if bad.size:
        raise CTRRError(f"correct_labels: {name} rows {bad[:8].tolist()} do not sum to 1")
    if np.any(rows < 0):
        raise CTRRError(f"correct_labels: {name} has negative entries")


def scaled_losses(per_sample_loss: np.ndarray) -> np.ndarray:
    """loss / max(loss); all zeros when every loss is zero"""
    losses = np.asarray(per_sample_loss, dtype=np.float64).reshape(-1)
    if np.any(losses < 0) or not np.all(np.isfinite(losses)):
        raise CTRRError("per-sample losses must be finite and non-negative")
    peak = losses.max() if losses.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(losses)
    return losses / peak


def correct_labels(noisy_onehot: np.ndarray, preds: np.ndarray, per_sample_loss: np.ndarray) -> np.ndarray:
    """
    Args:
        noisy_onehot: B x K observed labels (rows sum to 1)
        preds: B x K model predictions (rows sum to 1)
        per_sample_loss: B non-negative losses

    Returns:
        B x K soft labels, row i = (1 - w_i) * label_i + w_i * pred_i
    """
    labels = np.asarray(noisy_onehot, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if labels.shape != preds.shape or labels.ndim != 2:
        raise ShapeError('correct_labels', [labels.shape, preds.shape], "labels and predictions must be B x K")
    _check_rows('label', labels)
    _check_rows('prediction', preds)
    w = scaled_losses(per_sample_loss)
    if w.size != labels.shape[0]:
        raise ShapeError('correct_labels', [labels.shape, w.shape], "one loss per row")
    return (1.0 - w)[:, None] * labels + w[:, None] * preds
