"""
Reverse-mode differentiation tape

A Graph records primitive applications in creation order, which is a
topological order by construction. backward() walks the nodes in exact
reverse order and accumulates adjoints input by input, so gradients are
bitwise reproducible.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from src.numeric.primitives import PRIMITIVES
from src.numeric.tensor import Tensor, ArrayLike
from src.utils.errors import NumericError, ShapeError

LEAF = 'leaf'
CONSTANT = 'constant'


@dataclass(frozen=True)
class Node:
    """One recorded operation"""
    index: int
    op: str
    inputs: Tuple[int, ...]
    attrs: Mapping = field(default_factory=dict)
    requires_grad: bool = False
    name: Optional[str] = None


class NodeRef:
    """
    Handle to a node of a specific graph

    Arithmetic operators record the matching primitive on the owning graph.
    """

    __slots__ = ('graph', 'index')

    def __init__(self, graph: 'Graph', index: int):
        self.graph = graph
        self.index = index

    @property
    def value(self) -> Tensor:
        return self.graph.values[self.index]

    @property
    def shape(self):
        return self.value.shape

    @property
    def node(self) -> Node:
        return self.graph.nodes[self.index]

    def _coerce(self, other) -> 'NodeRef':
        if isinstance(other, NodeRef):
            return other
        return self.graph.constant(other)

    def __add__(self, other):
        return self.graph.apply('add', self, self._coerce(other))

    def __radd__(self, other):
        return self.graph.apply('add', self._coerce(other), self)

    def __sub__(self, other):
        return self.graph.apply('sub', self, self._coerce(other))

    def __rsub__(self, other):
        return self.graph.apply('sub', self._coerce(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.graph.apply('affine', self, scale=float(other))
        return self.graph.apply('mul', self, self._coerce(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        return self.graph.apply('matmul', self, self._coerce(other))

    def __neg__(self):
        return self.graph.apply('affine', self, scale=-1.0)

    @property
    def T(self):
        return self.graph.apply('transpose', self)

    def __repr__(self):
        node = self.node
        label = f" '{node.name}'" if node.name else ''
        return f"NodeRef(#{self.index} {node.op}{label}, shape={self.shape})"


class Graph:
    """
    Differentiation tape

    Attributes:
        nodes: recorded operations in topological order
        values: forward value of every node
        adjoints: per-node adjoint, populated by backward()
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.values: List[Tensor] = []
        self.adjoints: List[Optional[np.ndarray]] = []

    def __len__(self):
        return len(self.nodes)

    # ------------------------------------------------------------------
    # Node creation
    # ------------------------------------------------------------------

    def _append(self, op: str, inputs: Tuple[int, ...], value: Tensor, attrs: Mapping,
                requires_grad: bool, name: Optional[str]) -> NodeRef:
        index = len(self.nodes)
        self.nodes.append(Node(index, op, inputs, dict(attrs), requires_grad, name))
        self.values.append(value)
        self.adjoints.append(None)
        return NodeRef(self, index)

    def leaf(self, value: ArrayLike, name: Optional[str] = None, requires_grad: bool = True) -> NodeRef:
        """Input whose gradient is reported by backward()"""
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        return self._append(LEAF, (), tensor, {}, requires_grad, name)

    def constant(self, value: ArrayLike, name: Optional[str] = None) -> NodeRef:
        """Input that never receives gradient"""
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        return self._append(CONSTANT, (), tensor, {}, False, name)

    def _check_owned(self, ref: NodeRef):
        if not isinstance(ref, NodeRef) or ref.graph is not self:
            raise ValueError(f"{ref!r} does not belong to this graph")

    def apply(self, op_kind: str, *inputs: NodeRef, name: Optional[str] = None, **attrs) -> NodeRef:
        """
        Record a primitive application and compute its value

        Args:
            op_kind: name of a registered primitive
            *inputs: operand handles on this graph
            name: optional label for diagnostics
            **attrs: primitive attributes (axis, lo/hi, scale/shift)

        Returns:
            Handle to the new node

        Raises:
            ShapeError: operand shapes violate the primitive's rules
            NumericError: the result is not finite (or log/normalize preconditions fail)
        """
        if op_kind not in PRIMITIVES:
            raise ValueError(f"Unknown primitive '{op_kind}'. Available: {sorted(PRIMITIVES)}")
        primitive = PRIMITIVES[op_kind]
        if len(inputs) != primitive.arity:
            raise ShapeError(op_kind, [ref.shape for ref in inputs],
                             f"expected {primitive.arity} operand(s), got {len(inputs)}")
        for ref in inputs:
            self._check_owned(ref)

        shapes = [ref.shape for ref in inputs]
        expected = primitive.check(shapes, attrs)
        arrays = [ref.value.data for ref in inputs]
        out = np.asarray(primitive.forward(arrays, attrs), dtype=np.float64)
        if out.shape != expected:
            raise ShapeError(op_kind, shapes, f"produced {out.shape}, expected {expected}")
        if not np.all(np.isfinite(out)):
            raise NumericError(f"{op_kind}: produced non-finite values from operands {shapes}")

        requires_grad = op_kind != 'stop_gradient' and any(ref.node.requires_grad for ref in inputs)
        return self._append(op_kind, tuple(ref.index for ref in inputs), Tensor(out), attrs, requires_grad, name)

    # Convenience wrappers -------------------------------------------------

    def matmul(self, a, b):
        return self.apply('matmul', a, b)

    def add(self, a, b):
        return self.apply('add', a, b)

    def sub(self, a, b):
        return self.apply('sub', a, b)

    def mul(self, a, b):
        return self.apply('mul', a, b)

    def affine(self, a, scale: float = 1.0, shift: float = 0.0):
        return self.apply('affine', a, scale=float(scale), shift=float(shift))

    def relu(self, a):
        return self.apply('relu', a)

    def softmax(self, a):
        return self.apply('softmax', a)

    def log(self, a):
        return self.apply('log', a)

    def clamp(self, a, lo: float, hi: float):
        return self.apply('clamp', a, lo=float(lo), hi=float(hi))

    def normalize(self, a):
        return self.apply('normalize', a)

    def sum(self, a, axis: Optional[int] = None):
        return self.apply('sum', a, axis=axis)

    def mean(self, a, axis: Optional[int] = None):
        return self.apply('mean', a, axis=axis)

    def transpose(self, a):
        return self.apply('transpose', a)

    def dot(self, a, b):
        return self.apply('dot', a, b)

    def stop_gradient(self, a):
        return self.apply('stop_gradient', a)

    # ------------------------------------------------------------------
    # Differentiation
    # ------------------------------------------------------------------

    def backward(self, output: NodeRef) -> Dict[int, Tensor]:
        """
        Populate adjoints of every node with respect to a scalar output

        Args:
            output: scalar node of this graph

        Returns:
            Mapping from leaf index to its gradient (zeros for leaves the
            output does not depend on, including those behind stop_gradient)

        Raises:
            ShapeError: output is not a scalar
        """
        self._check_owned(output)
        if output.value.size != 1:
            raise ShapeError('backward', [output.shape], "output must be a scalar")

        self.adjoints = [None] * len(self.nodes)
        self.adjoints[output.index] = np.ones(output.shape)

        for index in range(output.index, -1, -1):
            grad = self.adjoints[index]
            node = self.nodes[index]
            if grad is None or node.op in (LEAF, CONSTANT) or not node.requires_grad:
                continue
            primitive = PRIMITIVES[node.op]
            arrays = [self.values[i].data for i in node.inputs]
            contributions = primitive.vjp(grad, arrays, self.values[index].data, node.attrs)
            for input_index, contribution in zip(node.inputs, contributions):
                if contribution is None or not self.nodes[input_index].requires_grad:
                    continue
                contribution = np.asarray(contribution, dtype=np.float64)
                if self.adjoints[input_index] is None:
                    self.adjoints[input_index] = np.array(contribution)
                else:
                    self.adjoints[input_index] = self.adjoints[input_index] + contribution

        return {
            node.index: self.grad(NodeRef(self, node.index))
            for node in self.nodes if node.op == LEAF
        }

    def grad(self, ref: NodeRef) -> Tensor:
        """Adjoint of a node after backward(); zeros if nothing flowed into it"""
        self._check_owned(ref)
        adjoint = self.adjoints[ref.index]
        if adjoint is None:
            return Tensor.zeros(ref.shape)
        return Tensor(adjoint)


def backward(graph: Graph, output: NodeRef) -> Dict[int, Tensor]:
    """Functional form of Graph.backward"""
    return graph.backward(output)


def stop_gradient(node: NodeRef) -> NodeRef:
    """Identity forward, zero adjoint contribution backward"""
    return node.graph.stop_gradient(node)


def apply_primitive(op_kind: str, *inputs: Union[Tensor, ArrayLike], **attrs) -> Tensor:
    """
    Evaluate one primitive eagerly on plain tensors

    Example:
        apply_primitive('normalize', Tensor([3.0, 4.0]))  # -> [0.6, 0.8]
    """
    graph = Graph()
    refs = [graph.constant(value) for value in inputs]
    return graph.apply(op_kind, *refs, **attrs).value
