"""Homotopy embedding H(x, t) = t*F(x) + gamma*(t-1)*(F(x) - F(x0)).

H is evaluated from the base system plus the cached F(x0), never by
expanding it into a larger expression tree.  Identities by construction:
H(x0, 0) = 0 for any admissible anchor, and H(x, 1) = F(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .expr import DomainError, System, eval_system, jacobian

__all__ = ["HomotopyProblem", "build_homotopy", "eval_homotopy",
           "theorem1_diagnostic", "DEFAULT_GAMMA"]

DEFAULT_GAMMA = 0.01
_SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class HomotopyProblem:
    base: System
    x0: np.ndarray
    gamma: float
    f_x0: np.ndarray  # cached F(x0)


def build_homotopy(sys: System, x0, gamma: float = DEFAULT_GAMMA) -> HomotopyProblem:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if sys.time_var is not None:
        raise ValueError("homotopy embedding applies to square static systems")
    x0 = np.asarray(x0, dtype=float)
    f_x0 = eval_system(sys, x0)  # raises DomainError for inadmissible anchors
    return HomotopyProblem(base=sys, x0=x0, gamma=float(gamma), f_x0=f_x0)


def homotopy_coeff(hp: HomotopyProblem, t):
    """H(x,t) = c(t)*F(x) - gamma*(t-1)*F(x0) with c(t) = t + gamma*(t-1)."""
    t = np.asarray(t, dtype=float)
    return t + hp.gamma * (t - 1.0)


def eval_homotopy(hp: HomotopyProblem, x, t) -> np.ndarray:
    fx = eval_system(hp.base, x)
    c = homotopy_coeff(hp, t)
    return c * fx - hp.gamma * (np.asarray(t, dtype=float) - 1.0) * hp.f_x0


def eval_homotopy_batch(hp: HomotopyProblem, X, ts):
    """H over a batch: X (B, n), ts (B,); returns (n_eq, B)."""
    fx = hp.base.eval_batch(np.asarray(X, dtype=float))
    ts = np.asarray(ts, dtype=float)
    c = homotopy_coeff(hp, ts)
    return c[None, :] * fx - hp.gamma * (ts - 1.0)[None, :] * hp.f_x0[:, None]


def theorem1_diagnostic(hp: HomotopyProblem, x, t):
    """Path-existence diagnostic: (D_x H, D_t H, |(D_x H)^-1 D_t H|).

    The condition value is +inf when D_x H is numerically singular
    (smallest singular value below 1e-12 of the largest).
    """
    x = np.asarray(x, dtype=float)
    fx = eval_system(hp.base, x)
    jf = jacobian(hp.base, x)
    c = float(homotopy_coeff(hp, t))
    dxh = c * jf
    dth = fx + hp.gamma * (fx - hp.f_x0)
    svals = np.linalg.svd(dxh, compute_uv=False)
    if svals[-1] < _SINGULAR_RTOL * svals[0] or svals[0] == 0.0:
        return dxh, dth, float("inf")
    condition = float(np.linalg.norm(np.linalg.solve(dxh, dth)))
    return dxh, dth, condition
