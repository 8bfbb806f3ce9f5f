from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault

from .tensor import Parameter


@dataclass
class Moments:
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, Parameter],
    grads: Mapping[str, np.ndarray],
    moments: Moments,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    t: int = 1,
) -> tuple[Mapping[str, Parameter], Moments]:
    """
    One adaptive-moment update with bias correction, applied in place.

    Parameters without an entry in ``grads`` are left untouched.
    """
    if t < 1:
        raise ConfigurationFault(f"Adam step counter starts at 1, got {t}.")
    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = moments.first.get(name, np.zeros_like(grad))
        v = moments.second.get(name, np.zeros_like(grad))
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad**2
        moments.first[name] = m
        moments.second[name] = v
        param.values -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return params, moments


class Adam:
    """Stateful wrapper around :func:`adam_step`."""

    def __init__(self, params: Mapping[str, Parameter], lr: float = 1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.moments = Moments()
        self.t = 0

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        self.t += 1
        adam_step(self.params, grads, self.moments, self.lr, self.beta1, self.beta2, self.eps, self.t)
