from __future__ import annotations

import contextvars
import itertools
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from temppnet.errors import ShapeError

BackwardFn = Callable[[np.ndarray], tuple["np.ndarray | None", ...]]

_NODE_COUNTER = itertools.count()
_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "temppnet_grad_enabled", default=True
)


def grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Run forward ops without recording graph nodes."""

    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def _frozen(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(slots=True, eq=False)
class Node:
    """One recorded operation: its parents and the closure mapping output grad to parent grads."""

    index: int
    op_kind: str
    parents: tuple[Tensor, ...]
    backward_fn: BackwardFn = field(repr=False)


class Tensor:
    __slots__ = ("_data", "requires_grad", "grad", "_node", "name")

    def __init__(
        self,
        data: Any,
        *,
        requires_grad: bool = False,
        name: str | None = None,
    ) -> None:
        self._data = _frozen(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._node: Node | None = None
        self.name = name

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def node(self) -> Node | None:
        return self._node

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self._data.size != 1:
            raise ShapeError("item", self.shape, detail="tensor is not a scalar")
        return float(self._data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self._data

    def assign(self, values: Any) -> None:
        """Replace the stored array of a leaf (optimizer updates, checkpoint loads)."""

        if self._node is not None:
            raise RuntimeError("assign() is only valid on leaf tensors")
        arr = _frozen(values)
        if arr.shape != self.shape:
            raise ShapeError("assign", self.shape, arr.shape)
        self._data = arr

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self._data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the implementations live in ``ops``.
    def __add__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.mul(other, self)

    def __neg__(self) -> Tensor:
        from temppnet.autodiff import ops

        return ops.neg(self)

    def __matmul__(self, other: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        from temppnet.autodiff import ops

        return ops.slice_(self, index)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def record(
    data: np.ndarray,
    op_kind: str,
    parents: tuple[Tensor, ...],
    backward_fn: BackwardFn,
) -> Tensor:
    """Wrap an op result, attaching a graph node when any parent needs a gradient."""

    out = Tensor.__new__(Tensor)
    arr = np.asarray(data, dtype=np.float64)
    if arr.flags.writeable:
        arr.setflags(write=False)
    out._data = arr
    out.requires_grad = False
    out.grad = None
    out._node = None
    out.name = None
    if grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._node = Node(
            index=next(_NODE_COUNTER),
            op_kind=op_kind,
            parents=parents,
            backward_fn=backward_fn,
        )
    return out


@dataclass(frozen=True, slots=True)
class Graph:
    """Nodes reachable from an output, in creation (topological) order."""

    nodes: tuple[Node, ...]

    @classmethod
    def from_output(cls, output: Tensor) -> Graph:
        seen: dict[int, Node] = {}
        stack = [output]
        while stack:
            t = stack.pop()
            node = t._node
            if node is None or node.index in seen:
                continue
            seen[node.index] = node
            stack.extend(node.parents)
        return cls(nodes=tuple(seen[i] for i in sorted(seen)))

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor) -> Graph:
    """Fill ``grad`` on every leaf with ``requires_grad`` reachable from ``loss``.

    Leaf gradients accumulate into any existing ``grad``; call ``zero_grad`` between steps.
    """

    if loss.data.size != 1 or loss.ndim > 1:
        raise ShapeError("backward", loss.shape, detail="loss must be a scalar")
    graph = Graph.from_output(loss)
    if loss._node is None:
        if loss.requires_grad:
            _accumulate_leaf(loss, np.ones_like(loss.data))
        return graph

    node_grads: dict[int, np.ndarray] = {loss._node.index: np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        upstream = node_grads.pop(node.index, None)
        if upstream is None:
            continue
        parent_grads = node.backward_fn(upstream)
        for parent, g in zip(node.parents, parent_grads, strict=True):
            if g is None or not parent.requires_grad:
                continue
            if g.shape != parent.shape:
                raise ShapeError(node.op_kind, g.shape, parent.shape, detail="gradient shape")
            if parent._node is None:
                _accumulate_leaf(parent, g)
            else:
                key = parent._node.index
                if key in node_grads:
                    node_grads[key] = node_grads[key] + g
                else:
                    node_grads[key] = g
    return graph


def _accumulate_leaf(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad = t.grad + g
