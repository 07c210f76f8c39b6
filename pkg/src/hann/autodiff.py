"""Gradient of the training objective with respect to the flat parameters.

The chain is split in two: expression-level forward-mode differentiation
supplies dH/dx at each collocation point, network backpropagation supplies
dx/dtheta, and the two are contracted into a single vector-Jacobian product.
The recorded forward activations act as the tape; replaying the same inputs
reproduces bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import backend
from .expr import DomainError
from .homotopy import HomotopyProblem, homotopy_coeff
from .net import NetworkParams

__all__ = ["LossSpec", "Tape", "NonFiniteLossError", "loss_and_grad",
           "record_forward"]


class NonFiniteLossError(ArithmeticError):
    """Loss or gradient became non-finite; carries the culprit location."""

    def __init__(self, message, equation_index=None, point=None):
        parts = [message]
        if equation_index is not None:
            parts.append(f"equation {equation_index}")
        if point is not None:
            parts.append(f"collocation point {point!r}")
        super().__init__("; ".join(parts))
        self.equation_index = equation_index
        self.point = point


@dataclass(frozen=True)
class LossSpec:
    """What to minimize: problem, anchor values, weights, collocation set.

    ``mode`` is "homotopy" (problem: HomotopyProblem, collocation on [0,1])
    or "time-varying" (problem exposes .system and .t_domain, collocation in
    actual time units).
    """

    mode: str
    problem: object
    anchor: np.ndarray
    collocation: np.ndarray
    w_iv: float = 1.0
    w_h: float = 1.0

    def __post_init__(self):
        if self.mode not in ("homotopy", "time-varying"):
            raise ValueError(f"unknown loss mode {self.mode!r}")
        if self.w_iv < 0 or self.w_h < 0:
            raise ValueError("loss weights must be non-negative")
        if self.w_iv == 0 and self.w_h == 0:
            raise ValueError("at least one loss weight must be positive")
        object.__setattr__(self, "anchor",
                           np.asarray(self.anchor, dtype=float))
        object.__setattr__(self, "collocation",
                           np.asarray(self.collocation, dtype=float).ravel())
        if self.collocation.size == 0:
            raise ValueError("collocation set is empty")
        lo, hi = self._input_interval()
        if np.any(self.collocation < lo) or np.any(self.collocation > hi):
            raise ValueError(f"collocation points outside [{lo}, {hi}]")

    def _input_interval(self):
        if self.mode == "homotopy":
            return 0.0, 1.0
        return self.problem.t_domain

    @property
    def system(self):
        if self.mode == "homotopy":
            return self.problem.base
        return self.problem.system


@dataclass(frozen=True)
class Tape:
    """Recorded forward pass: inputs, hidden activations, outputs."""

    inputs: np.ndarray
    activations: list
    outputs: np.ndarray


def record_forward(params: NetworkParams, tin) -> Tape:
    tin = np.asarray(tin, dtype=float)
    out, acts = backend.mlp_forward(params.theta, params.layer_sizes, tin)
    return Tape(inputs=tin, activations=acts, outputs=out)


def _locate_bad_point(sys, X, ts, t_env):
    """Slow path: find the first collocation point that fails to evaluate."""
    for j in range(X.shape[0]):
        try:
            tv = None if t_env is None else t_env[j]
            sys.eval_batch(X[j], t=tv)
        except DomainError:
            return float(ts[j])
    return None


def loss_and_grad(params: NetworkParams, spec: LossSpec, batch=None):
    """Scalar loss and its gradient w.r.t. every parameter slot."""
    ts = spec.collocation if batch is None else \
        np.asarray(batch, dtype=float).ravel()
    if ts.size == 0:
        raise ValueError("empty collocation batch")
    n_out = params.n_outputs
    sys = spec.system
    if n_out != sys.n_variables:
        raise ValueError(f"network has {n_out} outputs, system has "
                         f"{sys.n_variables} variables")

    if spec.mode == "homotopy":
        net_in = np.concatenate(([0.0], ts))
        t_env = None
    else:
        a, b = spec.problem.t_domain
        net_in = np.concatenate(([0.0], (ts - a) / (b - a)))
        t_env = ts

    tape = record_forward(params, net_in)
    out = tape.outputs
    if not np.all(np.isfinite(out)):
        raise NonFiniteLossError("non-finite network output")
    x_anchor_hat = out[0]
    X = out[1:]

    try:
        fvals, jac = sys.eval_batch_fwd(X, t=t_env)
    except DomainError as err:
        bad_t = _locate_bad_point(sys, X, ts, t_env)
        raise NonFiniteLossError(str(err),
                                 equation_index=err.equation_index,
                                 point=bad_t) from None

    n = ts.size
    if spec.mode == "homotopy":
        hp: HomotopyProblem = spec.problem
        c = homotopy_coeff(hp, ts)
        resid = c[None, :] * fvals \
            - hp.gamma * (ts - 1.0)[None, :] * hp.f_x0[:, None]
    else:
        c = np.ones_like(ts)
        resid = fvals

    dev = x_anchor_hat - spec.anchor
    loss = spec.w_iv * float(dev @ dev) \
        + spec.w_h * float(np.sum(resid * resid)) / n
    if not np.isfinite(loss):
        j_bad = np.argwhere(~np.isfinite(resid))
        eq_i, pt_j = (int(j_bad[0][0]), float(ts[j_bad[0][1]])) \
            if j_bad.size else (None, None)
        raise NonFiniteLossError("non-finite loss", equation_index=eq_i,
                                 point=pt_j)

    # gy[j, l] = dLoss/dx_l(t_j); contract dH/dx with the residuals
    gy = np.empty_like(out)
    gy[0] = 2.0 * spec.w_iv * dev
    weighted = resid * c[None, :]  # (n_eq, N)
    gy[1:] = (2.0 * spec.w_h / n) * np.einsum("ij,ilj->jl", weighted, jac)

    grad = backend.mlp_backward(params.theta, params.layer_sizes,
                                tape.inputs, tape.activations, gy)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteLossError("non-finite gradient")
    return loss, grad
