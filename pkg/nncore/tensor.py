"""
Tensor and Computation Record

A Tensor wraps a numpy array and, when it was produced by a differentiable
op, a link to its parents plus a backward closure. backward() walks the
record in reverse topological order and accumulates gradients into the
leaf tensors that asked for them.

HOW AN OP IS RECORDED:
======================
Ops build their output through Tensor.from_op(data, parents, backward, op).
`backward(grad_out)` returns one gradient (or None) per parent. Nothing is
recorded when no parent requires a gradient or inside `no_grad()`.

    def double(x):
        return Tensor.from_op(x.data * 2.0, (x,), lambda g: (g * 2.0,), "double")
"""
import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from common.errors import ArgumentError

Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
Scalar = Union[int, float]

_node_ids = itertools.count()
_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Operations inside the block are not recorded."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    """
    N-dimensional real array with an optional gradient buffer.

    Leaf tensors created with requires_grad=True collect gradients in
    `.grad` (same shape as `.data`) when backward() is run on a result.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.node_id = next(_node_ids)
        self.op = "leaf"
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Backward] = None

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], backward: Backward, op: str) -> "Tensor":
        out = cls(data)
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.op = op
            out._parents = tuple(parents)
            out._backward = backward
        return out

    # -- array facade ---------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ArgumentError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Same values, cut from the record."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # -- scalar algebra -------------------------------------------------

    def __add__(self, other: Union["Tensor", Scalar]) -> "Tensor":
        if isinstance(other, Tensor):
            _same_shape(self, other, "add")
            return Tensor.from_op(self.data + other.data, (self, other), lambda g: (g, g), "add")
        return Tensor.from_op(self.data + other, (self,), lambda g: (g,), "add")

    __radd__ = __add__

    def __mul__(self, other: Union["Tensor", Scalar]) -> "Tensor":
        if isinstance(other, Tensor):
            _same_shape(self, other, "mul")
            a, b = self.data, other.data
            return Tensor.from_op(a * b, (self, other), lambda g: (g * b, g * a), "mul")
        return Tensor.from_op(self.data * other, (self,), lambda g: (g * other,), "mul")

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: Union["Tensor", Scalar]) -> "Tensor":
        return self + (-other)

    def sum(self) -> "Tensor":
        shape = self.shape
        return Tensor.from_op(
            np.asarray(self.data.sum()),
            (self,),
            lambda g: (np.broadcast_to(g, shape).copy(),),
            "sum",
        )

    # -- differentiation ------------------------------------------------

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Accumulate d(self)/d(leaf) into every leaf that requires a gradient.

        grad defaults to 1 for single-element tensors.
        """
        if grad is None:
            if self.data.size != 1:
                raise ArgumentError("backward() without a gradient needs a single-element tensor")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.shape:
            raise ArgumentError(f"Gradient shape {grad.shape} does not match {self.shape}")

        pending: Dict[int, np.ndarray] = {self.node_id: grad}
        for node in reversed(ComputationRecord.trace(self).nodes):
            g = pending.pop(node.node_id, None)
            if g is None:
                continue
            if node.is_leaf:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                current = pending.get(parent.node_id)
                pending[parent.node_id] = parent_grad.copy() if current is None else current + parent_grad

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"<Tensor({self.shape}, {self.dtype}{flag}, op={self.op})>"


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ArgumentError(f"{op}: shapes {a.shape} and {b.shape} differ")


@dataclass(frozen=True)
class RecordEntry:
    op: str
    input_ids: Tuple[int, ...]
    output_id: int


class ComputationRecord:
    """
    The executed operations reachable from a result, in topological order.

    Every node appears exactly once; parents precede children.
    """

    def __init__(self, nodes: List[Tensor]):
        self.nodes = nodes

    @classmethod
    def trace(cls, root: Tensor) -> "ComputationRecord":
        order: List[Tensor] = []
        seen = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node.node_id in seen:
                continue
            seen.add(node.node_id)
            stack.append((node, True))
            for parent in node._parents:
                if parent.node_id not in seen:
                    stack.append((parent, False))
        return cls(order)

    @property
    def entries(self) -> List[RecordEntry]:
        return [
            RecordEntry(node.op, tuple(p.node_id for p in node._parents), node.node_id)
            for node in self.nodes
            if not node.is_leaf
        ]

    def __len__(self) -> int:
        return len(self.nodes)
