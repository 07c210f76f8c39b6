"""Feed-forward approximator x(t): scalar input, n outputs.

Hidden layers apply tanh after the affine map; the output layer is affine
only, since solutions are unbounded.  Parameters live in a single flat
vector packing, per layer, the row-major (fan_in, fan_out) weight matrix
followed by the bias vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import backend

__all__ = ["NetworkParams", "theta_length", "init_xavier", "forward",
           "forward_batch", "pack", "unpack",
           "save_params", "load_params"]

_SNAPSHOT_VERSION = 1


def theta_length(layer_sizes) -> int:
    return sum(layer_sizes[k - 1] * layer_sizes[k] + layer_sizes[k]
               for k in range(1, len(layer_sizes)))


@dataclass
class NetworkParams:
    layer_sizes: Tuple[int, ...]
    theta: np.ndarray

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        self.theta = np.asarray(self.theta, dtype=float)
        expected = theta_length(self.layer_sizes)
        if self.theta.shape != (expected,):
            raise ValueError(f"theta has length {self.theta.size}, "
                             f"expected {expected}")

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    def copy(self):
        return NetworkParams(self.layer_sizes, self.theta.copy())


def unpack(params: NetworkParams):
    """List of (W, b) views into the flat parameter vector."""
    sizes = params.layer_sizes
    layers = []
    off = 0
    for k in range(1, len(sizes)):
        fan_in, fan_out = sizes[k - 1], sizes[k]
        W = params.theta[off:off + fan_in * fan_out].reshape(fan_in, fan_out)
        off += fan_in * fan_out
        b = params.theta[off:off + fan_out]
        off += fan_out
        layers.append((W, b))
    return layers


def pack(layer_sizes, layers) -> np.ndarray:
    parts = []
    for W, b in layers:
        parts.append(np.asarray(W, dtype=float).ravel())
        parts.append(np.asarray(b, dtype=float).ravel())
    return np.concatenate(parts)


def init_xavier(layer_sizes, seed) -> NetworkParams:
    """Weights uniform on +-sqrt(6/(fan_in+fan_out)), biases zero."""
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) < 2 or any(s <= 0 for s in layer_sizes):
        raise ValueError("layer sizes must be a list of >= 2 positive ints")
    rng = np.random.default_rng(seed)
    theta = np.zeros(theta_length(layer_sizes))
    off = 0
    for k in range(1, len(layer_sizes)):
        fan_in, fan_out = layer_sizes[k - 1], layer_sizes[k]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        n_w = fan_in * fan_out
        theta[off:off + n_w] = rng.uniform(-bound, bound, n_w)
        off += n_w + fan_out  # biases stay zero
    return NetworkParams(layer_sizes, theta)


def forward_batch(params: NetworkParams, ts) -> np.ndarray:
    """Network outputs for a batch of scalar inputs, shape (B, n_outputs)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out, _ = backend.mlp_forward(params.theta, params.layer_sizes, ts)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite network output "
                                 "(parameter blow-up)")
    return out


def forward(params: NetworkParams, t: float) -> np.ndarray:
    """Network output for a single scalar input, shape (n_outputs,)."""
    return forward_batch(params, [float(t)])[0]


def save_params(params: NetworkParams, path):
    """Versioned text snapshot of layer sizes + theta, for warm restarts."""
    with open(path, "w") as fh:
        fh.write(f"hann-params v{_SNAPSHOT_VERSION}\n")
        fh.write(" ".join(str(s) for s in params.layer_sizes) + "\n")
        for v in params.theta:
            fh.write(f"{float(v)!r}\n")


def load_params(path) -> NetworkParams:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != f"hann-params v{_SNAPSHOT_VERSION}":
            raise ValueError(f"unsupported snapshot header {header!r}")
        sizes = tuple(int(s) for s in fh.readline().split())
        theta = np.array([float(line) for line in fh if line.strip()])
    return NetworkParams(sizes, theta)
