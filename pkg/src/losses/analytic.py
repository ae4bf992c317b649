"""
Closed-form pair gradients with h taken as the identity (z = stopgrad(q))

With t = q~i . q~j and c_i = 1 / ||q_i||^2:
    linear form:  dL'/dq_i = -(1/||q_i||) (q~j - t q~i),  ||.||^2 = c_i (1 - t^2)
    log form:     dL~/dq_i = dL'/dq_i / (1 - t)
                  published:   ||.||^2 = c_i (1 + t)
                  chain rule:  ||.||^2 = c_i (1 + t) / (1 - t)
"""

from typing import Tuple

import numpy as np

from src.config.settings import TrainingDefaults
from src.numeric.tensor import ArrayLike, as_array
from src.utils.errors import NumericError

MIN_NORM = 1e-8


def _unit(v: np.ndarray, label: str) -> Tuple[np.ndarray, float]:
    norm = float(np.linalg.norm(v))
    if norm < MIN_NORM:
        raise NumericError(f"{label} has zero norm")
    return v / norm, norm


def analytic_grad_ctr_prime(q_i: ArrayLike, q_j: ArrayLike) -> Tuple[np.ndarray, float]:
    """
    Gradient of the linear pair term with respect to q_i

    Returns:
        (gradient vector, c_i (1 - t^2))
    """
    u_i, n_i = _unit(as_array(q_i).reshape(-1), 'q_i')
    u_j, _ = _unit(as_array(q_j).reshape(-1), 'q_j')
    t = float(u_i @ u_j)
    grad = -(u_j - t * u_i) / n_i
    return grad, (1.0 - t * t) / (n_i * n_i)


def analytic_grad_norm_tilde(q_i: ArrayLike, q_j: ArrayLike,
                             clamp_margin: float = TrainingDefaults.CLAMP_MARGIN) -> Tuple[float, float]:
    """
    Squared gradient norm of the log-form pair term, both closed forms

    Returns:
        (c_i (1 + t), c_i (1 + t) / (1 - t))

    Raises:
        NumericError: t has reached the clamp ceiling 1 - δ
    """
    u_i, n_i = _unit(as_array(q_i).reshape(-1), 'q_i')
    u_j, _ = _unit(as_array(q_j).reshape(-1), 'q_j')
    t = float(u_i @ u_j)
    if t >= 1.0 - clamp_margin:
        raise NumericError(f"t={t} is at the clamp ceiling {1.0 - clamp_margin}; the log-form gradient is cut off")
    c_i = 1.0 / (n_i * n_i)
    return c_i * (1.0 + t), c_i * (1.0 + t) / (1.0 - t)


def vectors_with_cosine(t: float, dim: int, rng: np.random.Generator, scale_i: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Random q_i, q_j in R^dim with q~i . q~j = t exactly (up to round-off)
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    basis, _ = np.linalg.qr(rng.normal(size=(dim, 2)))
    e0, e1 = basis[:, 0], basis[:, 1]
    q_i = scale_i * e0
    q_j = t * e0 + np.sqrt(max(0.0, 1.0 - t * t)) * e1
    return q_i, q_j
