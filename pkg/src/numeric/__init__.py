"""
Dense tensors with reverse-mode differentiation

Usage:
    from src.numeric import Graph

    g = Graph()
    x = g.leaf([1.0, 2.0, 3.0])
    y = g.sum(x * x)
    g.backward(y)
    g.grad(x)   # -> [2, 4, 6]
"""

from .tensor import Tensor
from .graph import Graph, Node, NodeRef, backward, stop_gradient, apply_primitive
from .gradcheck import (
    GradCheckReport,
    finite_diff_gradient,
    check_gradient,
    check_gradient_leaves,
    relative_errors,
)
from .primitives import PRIMITIVES

__all__ = [
    'Tensor',
    'Graph',
    'Node',
    'NodeRef',
    'backward',
    'stop_gradient',
    'apply_primitive',
    'GradCheckReport',
    'finite_diff_gradient',
    'check_gradient',
    'check_gradient_leaves',
    'relative_errors',
    'PRIMITIVES',
]
