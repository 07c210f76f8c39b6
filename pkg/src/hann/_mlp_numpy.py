"""Pure-numpy MLP kernels (fallback backend).

Layout contract shared with the compiled backend: ``theta`` packs, per
layer, a row-major weight matrix of shape (fan_in, fan_out) followed by the
bias vector.  Hidden layers use tanh, the output layer is affine.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _unpack(theta, sizes):
    layers = []
    off = 0
    for k in range(1, len(sizes)):
        fan_in, fan_out = sizes[k - 1], sizes[k]
        W = theta[off:off + fan_in * fan_out].reshape(fan_in, fan_out)
        off += fan_in * fan_out
        b = theta[off:off + fan_out]
        off += fan_out
        layers.append((W, b))
    return layers


def mlp_forward(theta, sizes, tin):
    """Batched forward pass.

    Returns ``(out, acts)`` where ``out`` has shape (B, n_out) and ``acts``
    is the list of hidden-layer activations needed by :func:`mlp_backward`.
    """
    layers = _unpack(theta, sizes)
    a = np.asarray(tin, dtype=float).reshape(-1, 1)
    acts = []
    for k, (W, b) in enumerate(layers):
        z = a @ W + b
        if k < len(layers) - 1:
            a = np.tanh(z)
            acts.append(a)
        else:
            a = z
    return a, acts


def mlp_backward(theta, sizes, tin, acts, gy):
    """Vector-Jacobian product: gradient of sum(gy * out) w.r.t. theta."""
    layers = _unpack(theta, sizes)
    tin = np.asarray(tin, dtype=float).reshape(-1, 1)
    grad = np.zeros_like(theta)
    inputs = [tin] + acts  # input to each layer
    delta = np.asarray(gy, dtype=float)
    off = len(theta)
    for k in range(len(layers) - 1, -1, -1):
        W, b = layers[k]
        a_in = inputs[k]
        fan_in, fan_out = W.shape
        off -= fan_out
        grad[off:off + fan_out] = delta.sum(axis=0)
        off -= fan_in * fan_out
        grad[off:off + fan_in * fan_out] = (a_in.T @ delta).ravel()
        if k > 0:
            delta = (delta @ W.T) * (1.0 - acts[k - 1] ** 2)
    return grad
