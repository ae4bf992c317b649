"""
SGD with momentum and L2 weight decay

    g' = g + weight_decay * θ
    v  = momentum * v + g'
    θ  = θ - learning_rate * v
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from src.model.arch import ModelParams
from src.numeric.tensor import ArrayLike, Tensor, as_array
from src.utils.errors import ShapeError, TrainingDivergedError


def sgd_update(theta: np.ndarray, grad: np.ndarray, velocity: np.ndarray,
               learning_rate: float, momentum: float, weight_decay: float) -> Tuple[np.ndarray, np.ndarray]:
    """One momentum step on plain arrays; returns (theta, velocity)"""
    velocity = momentum * velocity + (grad + weight_decay * theta)
    return theta - learning_rate * velocity, velocity


@dataclass(frozen=True)
class SgdState:
    """Velocity tensors mirroring ModelParams groups"""
    velocity: Dict[str, Tuple[Tensor, ...]]

    @classmethod
    def zeros_like(cls, params: ModelParams) -> 'SgdState':
        return cls({group: tuple(Tensor.zeros(t.shape) for t in tensors)
                    for group, tensors in params.groups().items()})


def sgd_step(params: ModelParams, grads: Mapping[str, Sequence[ArrayLike]], state: SgdState,
             cfg) -> Tuple[ModelParams, SgdState]:
    """
    Update the parameter groups present in `grads`; other groups and their
    velocities are left untouched

    Args:
        params: current parameters
        grads: group name -> gradients ordered like the group's tensors
        state: velocities
        cfg: anything with learning_rate, momentum and weight_decay

    Returns:
        (new params, new state)

    Raises:
        TrainingDivergedError: a gradient is not finite (names the tensor)
        ShapeError: a gradient does not match its parameter
    """
    groups = params.groups()
    velocity = dict(state.velocity)
    updated = {}
    for group, group_grads in grads.items():
        tensors = groups[group]
        if len(group_grads) != len(tensors):
            raise ShapeError('sgd_step', [(len(group_grads),), (len(tensors),)],
                             f"group '{group}' has {len(tensors)} tensors")
        new_params, new_velocity = [], []
        for i, (theta, grad, v) in enumerate(zip(tensors, group_grads, velocity[group])):
            name = f"{group}.{'W' if i % 2 == 0 else 'b'}{i // 2}"
            g = as_array(grad)
            if g.shape != theta.shape:
                raise ShapeError('sgd_step', [theta.shape, g.shape], f"gradient of {name}")
            if not np.all(np.isfinite(g)):
                raise TrainingDivergedError(f"non-finite gradient in parameter tensor {name}")
            th, vel = sgd_update(theta.data, g, v.data, cfg.learning_rate, cfg.momentum, cfg.weight_decay)
            if not np.all(np.isfinite(th)):
                raise TrainingDivergedError(f"parameter tensor {name} became non-finite")
            new_params.append(Tensor(th))
            new_velocity.append(Tensor(vel))
        updated[group] = tuple(new_params)
        velocity[group] = tuple(new_velocity)
    return params.replace(**updated), SgdState(velocity)
