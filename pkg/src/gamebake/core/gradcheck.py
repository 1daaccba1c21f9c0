"""Central-difference gradient verification used across the test suite."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, parameter_gradients


def finite_difference(fn, params, h=1e-4) -> np.ndarray:
    """Central differences of the scalar `fn()` w.r.t. every entry of `params`."""
    grads = []
    for p in params:
        flat = p.data.ravel()
        g = np.zeros_like(flat)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lo_hi = float(fn().data)
            flat[i] = old - h
            lo_lo = float(fn().data)
            flat[i] = old
            g[i] = (lo_hi - lo_lo) / (2.0 * h)
        grads.append(g)
    return np.concatenate(grads) if grads else np.zeros(0)


def gradcheck(fn, params, h=1e-4) -> float:
    """Max-norm relative error between tape and finite-difference gradients.

    `fn` must rebuild the graph from `params` on every call and return a
    scalar Tensor.
    """
    analytic = parameter_gradients(fn(), list(params))
    numeric = finite_difference(fn, list(params), h=h)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)
