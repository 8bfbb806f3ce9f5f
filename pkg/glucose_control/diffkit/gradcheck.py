from collections.abc import Callable, Sequence

import numpy as np

from .tensor import Graph, Tensor


def numerical_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, eps: float = 1e-5) -> np.ndarray:
    """Central differences of ``loss_fn`` with respect to every entry of ``tensor``."""
    grad = np.zeros_like(tensor.values)
    flat = tensor.values.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        upper = float(loss_fn().values)
        flat[index] = original - eps
        lower = float(loss_fn().values)
        flat[index] = original
        grad.reshape(-1)[index] = (upper - lower) / (2 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def check_gradients(loss_fn: Callable[[], Tensor], tensors: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Largest relative error between backprop and central differences over ``tensors``."""
    with Graph() as graph:
        loss = loss_fn()
    graph.backward(loss)
    analytic = [np.zeros_like(t.values) if t.grad is None else t.grad.copy() for t in tensors]
    graph.reset()
    return max(relative_error(a, numerical_gradient(loss_fn, t, eps)) for a, t in zip(analytic, tensors))
