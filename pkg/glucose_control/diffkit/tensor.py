"""
Reverse-mode automatic differentiation over small dense float64 arrays.

Operations executed inside an active :class:`Graph` are appended to its tape in execution order,
which is a topological order by construction. Outside a graph the same operations run eagerly
without recording anything, which is what inference uses.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from contextvars import ContextVar
from dataclasses import dataclass

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault, UsageFault

_active_graph: ContextVar[Graph | None] = ContextVar("active_graph", default=None)

Vjp = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    """A float64 array plus an optional gradient of the same shape."""

    __slots__ = ("values", "grad", "requires_grad", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        self.values = np.array(values, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    def __add__(self, other: Tensor) -> Tensor:
        return add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        return sub(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        return mul(self, other)

    def __truediv__(self, other: Tensor) -> Tensor:
        return div(self, other)

    def __neg__(self) -> Tensor:
        return scale(self, -1.0)


class Parameter(Tensor):
    """A named trainable leaf."""

    __slots__ = ()

    def __init__(self, values, name: str):
        super().__init__(values, requires_grad=True, name=name)


@dataclass
class Node:
    kind: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    vjp: Vjp


class Graph:
    """
    Tape of executed operations.

    Use as a context manager; :meth:`backward` may run once per recording, :meth:`reset` clears the
    gradients so the same tape can be differentiated again.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._token = None
        self._touched: list[Tensor] = []
        self._differentiated = False

    def __enter__(self) -> Graph:
        self._token = _active_graph.set(self)
        return self

    def __exit__(self, *exc_info) -> None:
        _active_graph.reset(self._token)
        self._token = None

    def record(self, kind: str, output: Tensor, inputs: tuple[Tensor, ...], vjp: Vjp) -> Tensor:
        self.nodes.append(Node(kind, output, inputs, vjp))
        return output

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """
        Propagate d(loss)/d(.) through the tape in exact reverse order.

        :return: gradients of every ``requires_grad`` tensor reached, also stored in ``.grad``.
        :raise UsageFault: on a non-scalar loss or a second call without :meth:`reset`.
        """
        if self._differentiated:
            raise UsageFault("Graph.backward() called twice without reset().")
        if loss.values.size != 1:
            raise UsageFault(f"Loss must be a scalar, got shape {loss.shape}.")

        upstream: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
        tensors: dict[int, Tensor] = {id(loss): loss}
        for node in reversed(self.nodes):
            grad_output = upstream.get(id(node.output))
            if grad_output is None:
                continue
            for tensor, grad in zip(node.inputs, node.vjp(grad_output)):
                if grad is None:
                    continue
                key = id(tensor)
                if key in upstream:
                    upstream[key] = upstream[key] + grad
                else:
                    upstream[key] = grad
                    tensors[key] = tensor

        gradients = {}
        for key, tensor in tensors.items():
            tensor.grad = upstream[key]
            self._touched.append(tensor)
            if tensor.requires_grad:
                if not np.all(np.isfinite(tensor.grad)):
                    raise NumericalFault("Non-finite gradient", tensor=tensor.name)
                gradients[tensor] = tensor.grad
        self._differentiated = True
        return gradients

    def reset(self) -> None:
        for tensor in self._touched:
            tensor.grad = None
        self._touched = []
        self._differentiated = False


def backward(graph: Graph, loss: Tensor) -> dict[Tensor, np.ndarray]:
    return graph.backward(loss)


def _emit(kind: str, values: np.ndarray, inputs: tuple[Tensor, ...], vjp: Vjp) -> Tensor:
    output = Tensor(values)
    graph = _active_graph.get()
    if graph is not None:
        graph.record(kind, output, inputs, vjp)
    return output


def _require_same_shape(kind: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ConfigurationFault(f"{kind}: shape mismatch {a.shape} vs {b.shape}.")


def constant(values) -> Tensor:
    return Tensor(values)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("add", a, b)
    return _emit("add", a.values + b.values, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("sub", a, b)
    return _emit("sub", a.values - b.values, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("mul", a, b)
    return _emit("mul", a.values * b.values, (a, b), lambda g: (g * b.values, g * a.values))


def div(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("div", a, b)
    quotient = a.values / b.values
    return _emit("div", quotient, (a, b), lambda g: (g / b.values, -g * quotient / b.values))


def scale(a: Tensor, factor: float) -> Tensor:
    return _emit("scale", a.values * factor, (a,), lambda g: (g * factor,))


def mul_const(a: Tensor, factor: np.ndarray) -> Tensor:
    """Elementwise product with a constant array broadcastable to ``a``."""
    factor = np.asarray(factor, dtype=np.float64)
    return _emit("mul_const", a.values * factor, (a,), lambda g: (g * factor,))


def square(a: Tensor) -> Tensor:
    return _emit("square", a.values**2, (a,), lambda g: (2.0 * g * a.values,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out**2),))


def sigmoid(a: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * a.values))
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.values)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _emit("log", np.log(a.values), (a,), lambda g: (g / a.values,))


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise ``max(a, floor)``; the gradient flows only where ``a`` is above the floor."""
    mask = a.values > floor
    return _emit("maximum", np.where(mask, a.values, floor), (a,), lambda g: (g * mask,))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` of shape ``(in,)`` or ``(batch, in)``, ``weight`` of shape ``(out, in)``."""
    if x.shape[-1] != weight.shape[1]:
        raise ConfigurationFault(f"linear: input dim {x.shape[-1]} does not match weight {weight.shape}.")
    out = x.values @ weight.values.T
    if bias is not None:
        out = out + bias.values

    def vjp(g: np.ndarray):
        grad_x = g @ weight.values
        grad_w = np.outer(g, x.values) if g.ndim == 1 else g.T @ x.values
        grad_b = None if bias is None else (g if g.ndim == 1 else g.sum(axis=0))
        return grad_x, grad_w, grad_b

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return _emit("linear", out, inputs, vjp)


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Join along the last (feature) axis."""
    sizes = [t.shape[-1] for t in tensors]
    bounds = np.cumsum([0, *sizes])

    def vjp(g: np.ndarray):
        return [g[..., bounds[i]:bounds[i + 1]] for i in range(len(tensors))]

    return _emit("concat", np.concatenate([t.values for t in tensors], axis=-1), tuple(tensors), vjp)


def take(a: Tensor, columns: slice | int) -> Tensor:
    """Select feature columns (last axis)."""
    out = a.values[..., columns]

    def vjp(g: np.ndarray):
        grad = np.zeros_like(a.values)
        grad[..., columns] = g
        return (grad,)

    return _emit("take", out, (a,), vjp)


def total(a: Tensor) -> Tensor:
    return _emit("sum", np.array(a.values.sum()), (a,), lambda g: (np.full_like(a.values, g),))


def mean(a: Tensor) -> Tensor:
    n = a.values.size
    return _emit("mean", np.array(a.values.mean()), (a,), lambda g: (np.full_like(a.values, g / n),))


def check_finite(a: Tensor, message: str, **context) -> Tensor:
    if not np.all(np.isfinite(a.values)):
        raise NumericalFault(message, **context)
    return a
