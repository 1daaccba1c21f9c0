"""Bias-corrected Adam over a list of parameter tensors.

Moments are kept in float64 alongside the parameters. A NaN anywhere in the
gradients rejects the whole step (parameters and moments untouched).
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class NanGradientError(RuntimeError):
    pass


class Adam:
    def __init__(self, params, lr=1e-2, beta1=0.9, beta2=0.99, eps=1e-15, lr_scales=None):
        """`lr_scales` optionally multiplies the learning rate per parameter tensor."""
        self.params: list[Tensor] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.lr_scales = list(lr_scales) if lr_scales is not None else [1.0] * len(self.params)
        if len(self.lr_scales) != len(self.params):
            raise ValueError("lr_scales length mismatch")
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self._scratch = [np.empty_like(p.data) for p in self.params]
        self.step_count = 0

    def step(self, grads=None):
        """Apply one update from `grads` (defaults to each param's `.grad`)."""
        if grads is None:
            grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise NanGradientError("non-finite gradient; step rejected")
        t = self.step_count + 1
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for p, g, m, v, scale, buf in zip(self.params, grads, self.m, self.v,
                                          self.lr_scales, self._scratch):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            # buf = sqrt(v / c2) + eps, then p -= lr * (m / c1) / buf
            np.divide(v, c2, out=buf)
            np.sqrt(buf, out=buf)
            buf += self.eps
            np.divide(m, buf, out=buf)
            buf *= self.lr * scale / c1
            p.data -= buf
        self.step_count = t

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
