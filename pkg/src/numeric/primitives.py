"""
Primitive operations of the differentiation tape

Each primitive knows how to validate operand shapes, compute its forward
value and pull an output adjoint back to its inputs (vector-Jacobian
product). A vjp entry of None means "no gradient flows to this input".
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import NumericError, ShapeError

Shape = Tuple[int, ...]

# Rows shorter than this cannot be normalized
NORMALIZE_MIN_NORM = 1e-8


@dataclass(frozen=True)
class Primitive:
    name: str
    arity: int
    check: Callable[[Sequence[Shape], dict], Shape]
    forward: Callable[[Sequence[np.ndarray], dict], np.ndarray]
    vjp: Callable[[np.ndarray, Sequence[np.ndarray], np.ndarray, dict], Tuple[Optional[np.ndarray], ...]]


# ============================================================================
# Shape rules
# ============================================================================

def _same_shape(shapes, attrs):
    return tuple(shapes[0])


def _broadcast_shape(name):
    def check(shapes, attrs):
        a, b = shapes
        if a == b:
            return a
        if b == ():
            return a
        if a == ():
            return b
        if len(a) == 2 and b == (a[1],):
            return a
        if len(b) == 2 and a == (b[1],):
            return b
        raise ShapeError(name, shapes, "expected equal shapes, a scalar, or a row vector matching the last axis")
    return check


def _check_matmul(shapes, attrs):
    a, b = shapes
    if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
        raise ShapeError('matmul', shapes, "expected (m, k) @ (k, n)")
    return (a[0], b[1])


def _check_dot(shapes, attrs):
    a, b = shapes
    if len(a) != 1 or a != b:
        raise ShapeError('dot', shapes, "expected two vectors of equal length")
    return ()


def _check_transpose(shapes, attrs):
    (a,) = shapes
    if len(a) != 2:
        raise ShapeError('transpose', shapes, "expected a matrix")
    return (a[1], a[0])


def _check_rows(name):
    def check(shapes, attrs):
        (a,) = shapes
        if len(a) not in (1, 2) or a[-1] < 1:
            raise ShapeError(name, shapes, "expected a vector or a matrix with at least one column")
        return tuple(a)
    return check


def _check_clamp(shapes, attrs):
    if attrs['lo'] > attrs['hi']:
        raise ValueError(f"clamp: lo={attrs['lo']} exceeds hi={attrs['hi']}")
    return tuple(shapes[0])


def _check_reduce(name):
    def check(shapes, attrs):
        (a,) = shapes
        axis = attrs.get('axis')
        if axis is None:
            return ()
        if not -len(a) <= axis < len(a):
            raise ShapeError(name, shapes, f"axis {axis} out of range")
        return tuple(d for i, d in enumerate(a) if i != axis % len(a))
    return check


# ============================================================================
# Helpers
# ============================================================================

def _unbroadcast(grad: np.ndarray, shape: Shape) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of the broadcasting rules above)"""
    if grad.shape == tuple(shape):
        return grad
    if shape == ():
        return np.asarray(grad.sum())
    # row vector broadcast over a matrix
    return grad.sum(axis=0)


def _expand_reduced(grad: np.ndarray, shape: Shape, axis: Optional[int]) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad, shape)
    return np.broadcast_to(np.expand_dims(grad, axis), shape)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / np.sum(exps, axis=-1, keepdims=True)


def _normalize(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms < NORMALIZE_MIN_NORM):
        rows = np.argwhere(norms.reshape(-1) < NORMALIZE_MIN_NORM).reshape(-1)
        raise NumericError(
            f"normalize: rows {rows[:8].tolist()} have norm below {NORMALIZE_MIN_NORM} "
            f"(collapsed representation)"
        )
    return x / norms


def _log(x: np.ndarray) -> np.ndarray:
    if np.any(x <= 0):
        raise NumericError(
            f"log: {int(np.sum(x <= 0))} non-positive entries (min={float(np.min(x))}); "
            f"an upstream clamp was bypassed"
        )
    return np.log(x)


# ============================================================================
# Registry
# ============================================================================

PRIMITIVES: Dict[str, Primitive] = {}


def _register(primitive: Primitive):
    PRIMITIVES[primitive.name] = primitive


_register(Primitive(
    'add', 2, _broadcast_shape('add'),
    lambda xs, at: xs[0] + xs[1],
    lambda g, xs, out, at: (_unbroadcast(g, xs[0].shape), _unbroadcast(g, xs[1].shape)),
))

_register(Primitive(
    'sub', 2, _broadcast_shape('sub'),
    lambda xs, at: xs[0] - xs[1],
    lambda g, xs, out, at: (_unbroadcast(g, xs[0].shape), _unbroadcast(-g, xs[1].shape)),
))

_register(Primitive(
    'mul', 2, _broadcast_shape('mul'),
    lambda xs, at: xs[0] * xs[1],
    lambda g, xs, out, at: (_unbroadcast(g * xs[1], xs[0].shape), _unbroadcast(g * xs[0], xs[1].shape)),
))

_register(Primitive(
    'matmul', 2, _check_matmul,
    lambda xs, at: xs[0] @ xs[1],
    lambda g, xs, out, at: (g @ xs[1].T, xs[0].T @ g),
))

_register(Primitive(
    'dot', 2, _check_dot,
    lambda xs, at: np.asarray(np.dot(xs[0], xs[1])),
    lambda g, xs, out, at: (g * xs[1], g * xs[0]),
))

_register(Primitive(
    'transpose', 1, _check_transpose,
    lambda xs, at: np.ascontiguousarray(xs[0].T),
    lambda g, xs, out, at: (g.T,),
))

# scale * x + shift, with scalar attributes
_register(Primitive(
    'affine', 1, _same_shape,
    lambda xs, at: at.get('scale', 1.0) * xs[0] + at.get('shift', 0.0),
    lambda g, xs, out, at: (at.get('scale', 1.0) * g,),
))

_register(Primitive(
    'relu', 1, _same_shape,
    lambda xs, at: np.maximum(xs[0], 0.0),
    lambda g, xs, out, at: (g * (xs[0] > 0),),
))

_register(Primitive(
    'softmax', 1, _check_rows('softmax'),
    lambda xs, at: _softmax(xs[0]),
    lambda g, xs, out, at: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),),
))

_register(Primitive(
    'log', 1, _same_shape,
    lambda xs, at: _log(xs[0]),
    lambda g, xs, out, at: (g / xs[0],),
))

_register(Primitive(
    'clamp', 1, _check_clamp,
    lambda xs, at: np.clip(xs[0], at['lo'], at['hi']),
    lambda g, xs, out, at: (g * ((xs[0] >= at['lo']) & (xs[0] <= at['hi'])),),
))

_register(Primitive(
    'normalize', 1, _check_rows('normalize'),
    lambda xs, at: _normalize(xs[0]),
    lambda g, xs, out, at: (
        (g - out * np.sum(g * out, axis=-1, keepdims=True)) / np.linalg.norm(xs[0], axis=-1, keepdims=True),
    ),
))

_register(Primitive(
    'sum', 1, _check_reduce('sum'),
    lambda xs, at: np.asarray(np.sum(xs[0], axis=at.get('axis'))),
    lambda g, xs, out, at: (_expand_reduced(g, xs[0].shape, at.get('axis')).copy(),),
))

_register(Primitive(
    'mean', 1, _check_reduce('mean'),
    lambda xs, at: np.asarray(np.mean(xs[0], axis=at.get('axis'))),
    lambda g, xs, out, at: (
        _expand_reduced(g, xs[0].shape, at.get('axis'))
        / (xs[0].size if at.get('axis') is None else xs[0].shape[at['axis']]),
    ),
))

_register(Primitive(
    'stop_gradient', 1, _same_shape,
    lambda xs, at: xs[0],
    lambda g, xs, out, at: (None,),
))
