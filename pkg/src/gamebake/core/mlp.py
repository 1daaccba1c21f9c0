"""Tiny fully-connected networks: affine layers, ReLU between, one output activation."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

_OUTPUT_ACTIVATIONS = ("none", "softplus", "sigmoid", "softmax")


class TinyMlp:
    def __init__(self, widths, output_activation="none", rng=None, name="mlp"):
        """widths = [in, hidden..., out]; weights Glorot-uniform, biases zero."""
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if output_activation not in _OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {output_activation!r}")
        self.widths = list(widths)
        self.output_activation = output_activation
        self.name = name
        rng = rng or np.random.default_rng(0)
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(Tensor(w, requires_grad=True, name=f"{name}.w{i}"))
            self.biases.append(Tensor(np.zeros(fan_out), requires_grad=True, name=f"{name}.b{i}"))

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params())

    def __call__(self, x) -> Tensor:
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.shape[-1] != self.widths[0]:
            raise ValueError(f"{self.name}: input width {x.shape[-1]} != {self.widths[0]}")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = h.relu()
        if self.output_activation == "softplus":
            return h.softplus()
        if self.output_activation == "sigmoid":
            return h.sigmoid()
        if self.output_activation == "softmax":
            return h.softmax(axis=-1)
        return h
