"""Dense layer, tanh MLP and GRU cell built on :mod:`glucose_control.diffkit.tensor`."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault

from . import tensor as T
from .tensor import Parameter, Tensor


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int, gain: float = 1.0) -> np.ndarray:
    limit = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class Module:
    """Anything that owns named parameters."""

    def parameters(self) -> dict[str, Parameter]:
        raise NotImplementedError

    def zero_(self) -> None:
        for parameter in self.parameters().values():
            parameter.values[...] = 0.0


class Dense(Module):

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str, gain: float = 1.0):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(_glorot(rng, out_dim, in_dim, gain), name=f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return T.linear(x, self.weight, self.bias)

    def parameters(self) -> dict[str, Parameter]:
        return {self.weight.name: self.weight, self.bias.name: self.bias}


class Mlp(Module):
    """Fully connected network: tanh on hidden layers, identity on the output layer."""

    def __init__(self, dims: Sequence[int], rng: np.random.Generator, name: str, output_gain: float = 1.0):
        if len(dims) < 2:
            raise ConfigurationFault(f"An MLP needs at least input and output dims, got {list(dims)}.")
        self.dims = list(dims)
        last = len(dims) - 2
        self.layers = [
            Dense(dims[i], dims[i + 1], rng, name=f"{name}.{i}", gain=output_gain if i == last else 1.0)
            for i in range(len(dims) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for index, layer in enumerate(self.layers):
            x = layer(x)
            if index < len(self.layers) - 1:
                x = T.tanh(x)
        return x

    def parameters(self) -> dict[str, Parameter]:
        params: dict[str, Parameter] = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params


class GruCell(Module):
    """
    Gated recurrent unit::

        r = sigmoid(W_ir x + b_ir + W_hr h)
        z = sigmoid(W_iz x + b_iz + W_hz h)
        n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
        h' = (1 - z) * n + z * h
    """

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator, name: str = "gru"):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.input_reset = Dense(input_dim, hidden_dim, rng, f"{name}.input_reset")
        self.input_update = Dense(input_dim, hidden_dim, rng, f"{name}.input_update")
        self.input_candidate = Dense(input_dim, hidden_dim, rng, f"{name}.input_candidate")
        self.hidden_reset = Parameter(_glorot(rng, hidden_dim, hidden_dim), f"{name}.hidden_reset.weight")
        self.hidden_update = Parameter(_glorot(rng, hidden_dim, hidden_dim), f"{name}.hidden_update.weight")
        self.hidden_candidate = Dense(hidden_dim, hidden_dim, rng, f"{name}.hidden_candidate")

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        if x.shape[-1] != self.input_dim or h.shape[-1] != self.hidden_dim:
            raise ConfigurationFault(
                f"GRU expects input dim {self.input_dim} and hidden dim {self.hidden_dim}, "
                f"got {x.shape[-1]} and {h.shape[-1]}."
            )
        reset = T.sigmoid(T.add(self.input_reset(x), T.linear(h, self.hidden_reset)))
        update = T.sigmoid(T.add(self.input_update(x), T.linear(h, self.hidden_update)))
        candidate = T.tanh(T.add(self.input_candidate(x), T.mul(reset, self.hidden_candidate(h))))
        keep = T.mul(update, h)
        return T.add(T.sub(candidate, T.mul(update, candidate)), keep)

    def parameters(self) -> dict[str, Parameter]:
        params = {
            self.hidden_reset.name: self.hidden_reset,
            self.hidden_update.name: self.hidden_update,
        }
        for dense in (self.input_reset, self.input_update, self.input_candidate, self.hidden_candidate):
            params.update(dense.parameters())
        return params


def forward_gru(cell: GruCell, inputs: Sequence[Tensor], h0: Tensor) -> Tensor:
    """Run the recurrence over ``inputs`` and return the final hidden state."""
    if len(inputs) == 0:
        raise ConfigurationFault("forward_gru needs a non-empty input sequence.")
    h = h0
    for x in inputs:
        h = cell(x, h)
    return h
