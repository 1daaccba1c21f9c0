"""Reverse-mode autodiff on numpy arrays.

A small tape: every op returns a ``Tensor`` holding its value, its parents
and a closure that scatters the output gradient back to the parents.
``Tensor.backward()`` runs the tape in reverse topological order, which is
fixed by construction (list append order), so gradient accumulation is
deterministic run to run.

All math is float64; parameters are quantized to float32 only at
checkpoint time.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "as_tensor", "concat", "backward", "parameter_gradients"]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    nd = grad.ndim - len(shape)
    if nd > 0:
        grad = grad.sum(axis=tuple(range(nd)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    # -- graph plumbing ----------------------------------------------------

    @staticmethod
    def _make(data, parents, backward):
        out = Tensor(data)
        live = tuple(p for p in parents if isinstance(p, Tensor) and p._tracked())
        if live:
            out._parents = live
            out._backward = backward
        return out

    def _tracked(self):
        return self.requires_grad or self._parents

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    def backward(self):
        """Reverse-mode sweep from a scalar root."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar root")
        # iterative topo sort (graphs can be deep: per-sample loops)
        order = []
        seen = {id(self)}
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    seen.add(id(p))
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accum(self, g):
        g = _unbroadcast(np.asarray(g, dtype=np.float64), self.data.shape)
        if self.grad is None:
            self.grad = g.copy() if g.base is not None or g.flags.writeable is False else g
        else:
            self.grad = self.grad + g

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        o = as_tensor(other)

        def bw(g):
            self._accum(g)
            o._accum(g)

        return Tensor._make(self.data + o.data, (self, o), bw)

    __radd__ = __add__

    def __neg__(self):
        def bw(g):
            self._accum(-g)

        return Tensor._make(-self.data, (self,), bw)

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        o = as_tensor(other)

        def bw(g):
            self._accum(g * o.data)
            o._accum(g * self.data)

        return Tensor._make(self.data * o.data, (self, o), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_tensor(other)

        def bw(g):
            self._accum(g / o.data)
            o._accum(-g * self.data / (o.data * o.data))

        return Tensor._make(self.data / o.data, (self, o), bw)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, p):
        if not np.isscalar(p):
            raise TypeError("only scalar exponents supported")
        out = self.data**p

        def bw(g):
            self._accum(g * p * self.data ** (p - 1))

        return Tensor._make(out, (self,), bw)

    def __matmul__(self, other):
        o = as_tensor(other)

        def bw(g):
            self._accum(g @ o.data.T)
            o._accum(self.data.T @ g)

        return Tensor._make(self.data @ o.data, (self, o), bw)

    # -- elementwise nonlinearities ------------------------------------------

    def relu(self):
        mask = self.data > 0.0

        def bw(g):
            self._accum(g * mask)

        return Tensor._make(self.data * mask, (self,), bw)

    def softplus(self):
        out = np.logaddexp(0.0, self.data)

        def bw(g):
            self._accum(g * _sigmoid(self.data))

        return Tensor._make(out, (self,), bw)

    def sigmoid(self):
        out = _sigmoid(self.data)

        def bw(g):
            self._accum(g * out * (1.0 - out))

        return Tensor._make(out, (self,), bw)

    def exp(self):
        out = np.exp(self.data)

        def bw(g):
            self._accum(g * out)

        return Tensor._make(out, (self,), bw)

    def log(self):
        def bw(g):
            self._accum(g / self.data)

        return Tensor._make(np.log(self.data), (self,), bw)

    def sqrt(self):
        out = np.sqrt(self.data)

        def bw(g):
            self._accum(g * 0.5 / out)

        return Tensor._make(out, (self,), bw)

    def abs(self):
        sign = np.sign(self.data)

        def bw(g):
            self._accum(g * sign)

        return Tensor._make(np.abs(self.data), (self,), bw)

    def maximum(self, floor):
        """Elementwise max with a constant; subgradient 0 on the clamped side."""
        mask = self.data > floor

        def bw(g):
            self._accum(g * mask)

        return Tensor._make(np.maximum(self.data, floor), (self,), bw)

    # -- reductions / shape ----------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = self.data.sum(axis=axis, keepdims=keepdims)

        def bw(g):
            if axis is None:
                self._accum(np.broadcast_to(g, self.data.shape))
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                self._accum(np.broadcast_to(gg, self.data.shape))

        return Tensor._make(out, (self,), bw)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        def bw(g):
            self._accum(g.reshape(self.data.shape))

        return Tensor._make(self.data.reshape(shape), (self,), bw)

    def __getitem__(self, idx):
        out = self.data[idx]
        # slices (and slice tuples) never alias, so plain assignment scatters
        simple = isinstance(idx, slice) or (
            isinstance(idx, tuple) and all(isinstance(s, (slice, int)) for s in idx)
        )

        def bw(g):
            buf = np.zeros_like(self.data)
            if simple:
                buf[idx] = g
            else:
                np.add.at(buf, idx, g)
            self._accum(buf)

        return Tensor._make(out, (self,), bw)

    # -- vector helpers ----------------------------------------------------------

    def softmax(self, axis=-1):
        z = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(z)
        out = e / e.sum(axis=axis, keepdims=True)

        def bw(g):
            dot = (g * out).sum(axis=axis, keepdims=True)
            self._accum(out * (g - dot))

        return Tensor._make(out, (self,), bw)

    def normalize(self, axis=-1, eps=1e-12):
        """Scale to unit L2 norm along `axis`."""
        r = np.sqrt((self.data * self.data).sum(axis=axis, keepdims=True))
        r = np.maximum(r, eps)
        out = self.data / r

        def bw(g):
            dot = (g * self.data).sum(axis=axis, keepdims=True)
            self._accum(g / r - self.data * (dot / (r * r * r)))

        return Tensor._make(out, (self,), bw)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, a, b in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(a, b)
            t._accum(g[tuple(sl)])

    return Tensor._make(np.concatenate(datas, axis=axis), tuple(tensors), bw)


def backward(loss: Tensor) -> None:
    """Module-level alias; gradients land on each parameter's `.grad`."""
    loss.backward()


def parameter_gradients(loss: Tensor, params) -> np.ndarray:
    """Run backward and return the flat gradient over `params` (zeros where unused)."""
    for p in params:
        p.zero_grad()
    loss.backward()
    parts = []
    for p in params:
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        parts.append(g.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)
