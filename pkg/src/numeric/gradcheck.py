"""
Finite-difference gradient oracle

Central differences are the ground truth against which the tape's
backward pass and every closed-form gradient are audited.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.numeric.graph import Graph, NodeRef
from src.numeric.tensor import Tensor, ArrayLike, as_array
from src.utils.errors import NumericError

DEFAULT_STEP = 1e-5

# Per-coordinate relative errors use max(|analytic|, |numeric|, FLOOR * max(1, |f(x)|))
# as denominator; float64 round-off of a central difference scales with |f|/step.
RELATIVE_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    """
    Comparison of backward() against central differences

    Attributes:
        max_relative_error: largest per-coordinate relative error (>= 0)
        errors: per-coordinate relative errors, in `coordinates` order
        step: finite-difference step
        coordinates: flat indices that were checked
        analytic: backward() values at those coordinates
        numeric: central-difference values at those coordinates
    """
    max_relative_error: float
    errors: List[float]
    step: float
    coordinates: List[int] = field(default_factory=list)
    analytic: List[float] = field(default_factory=list)
    numeric: List[float] = field(default_factory=list)

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_relative_error <= tolerance

    def to_dict(self) -> dict:
        return {
            'max_relative_error': self.max_relative_error,
            'step': self.step,
            'coordinates': list(self.coordinates),
            'errors': list(self.errors),
        }


def finite_diff_gradient(scalar_fn: Callable[[np.ndarray], float],
                         point: ArrayLike,
                         step: float = DEFAULT_STEP,
                         coordinates: Optional[Sequence[int]] = None) -> Tensor:
    """
    Central-difference gradient estimate

    Args:
        scalar_fn: pure function of an array shaped like `point`
        point: evaluation point
        step: difference step h > 0
        coordinates: flat indices to estimate (default: all); when given the
            result is a vector in this order

    Returns:
        (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate

    Raises:
        ValueError: step is not positive
        NumericError: f is not finite at a perturbed point
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    base = np.array(as_array(point), dtype=np.float64)
    flat = base.reshape(-1)
    indices = range(flat.size) if coordinates is None else list(coordinates)

    estimates = []
    for i in indices:
        original = flat[i]
        flat[i] = original + step
        f_plus = float(scalar_fn(base.copy()))
        flat[i] = original - step
        f_minus = float(scalar_fn(base.copy()))
        flat[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"finite_diff_gradient: non-finite function value at coordinate {i}")
        estimates.append((f_plus - f_minus) / (2.0 * step))

    estimates = np.array(estimates)
    if coordinates is None:
        estimates = estimates.reshape(base.shape)
    return Tensor(estimates)


def relative_errors(analytic: np.ndarray, numeric: np.ndarray, scale: float = 1.0) -> np.ndarray:
    floor = RELATIVE_FLOOR * max(1.0, abs(scale))
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def check_gradient_leaves(build: Callable[[Graph, List[NodeRef]], NodeRef],
                          points: Sequence[ArrayLike],
                          step: float = DEFAULT_STEP,
                          coordinates: Optional[Sequence[int]] = None) -> GradCheckReport:
    """
    Compare backward() with central differences for a graph with several leaves

    Coordinates index the concatenation of the flattened points, in order.

    Args:
        build: callable(graph, leaves) -> scalar node, one leaf per point
        points: evaluation points
        step: finite-difference step
        coordinates: optional subset of flat indices to check

    Returns:
        GradCheckReport
    """
    arrays = [np.array(as_array(p), dtype=np.float64) for p in points]
    shapes = [a.shape for a in arrays]
    flat = np.concatenate([a.reshape(-1) for a in arrays])

    def run(values: np.ndarray):
        graph = Graph()
        leaves, offset = [], 0
        for i, shape in enumerate(shapes):
            size = int(np.prod(shape, dtype=np.int64))
            leaves.append(graph.leaf(values[offset:offset + size].reshape(shape), name=f"x{i}"))
            offset += size
        return graph, leaves, build(graph, leaves)

    graph, leaves, out = run(flat)
    graph.backward(out)
    analytic_full = np.concatenate([graph.grad(leaf).data.reshape(-1) for leaf in leaves])
    f_value = out.value.item()

    indices = list(range(flat.size)) if coordinates is None else [int(i) for i in coordinates]
    numeric = finite_diff_gradient(lambda values: run(values)[2].value.item(), flat, step,
                                   coordinates=indices).data.reshape(-1)
    analytic = analytic_full[indices]
    errors = relative_errors(analytic, numeric, scale=f_value)

    return GradCheckReport(
        max_relative_error=float(errors.max()) if errors.size else 0.0,
        errors=errors.tolist(),
        step=step,
        coordinates=indices,
        analytic=analytic.tolist(),
        numeric=numeric.tolist(),
    )


def check_gradient(build: Callable[[Graph, NodeRef], NodeRef],
                   point: ArrayLike,
                   step: float = DEFAULT_STEP,
                   coordinates: Optional[Sequence[int]] = None) -> GradCheckReport:
    """
    Compare backward() with central differences for a graph-building function

    Args:
        build: callable(graph, x) -> scalar node, where x is a leaf holding the point
        point: evaluation point
        step: finite-difference step
        coordinates: optional subset of flat indices to check

    Returns:
        GradCheckReport
    """
    return check_gradient_leaves(lambda graph, leaves: build(graph, leaves[0]), [point], step, coordinates)
