"""Loss assembly and minimization (L-BFGS with strong Wolfe line search,
or Adam with a fixed budget)."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .autodiff import LossSpec, NonFiniteLossError, loss_and_grad
from .net import NetworkParams

__all__ = ["LossSpec", "OptimizerConfig", "TrainConfig", "TrainingHistory",
           "assemble_loss", "lbfgs_minimize", "adam_minimize",
           "minimize_lbfgs", "minimize_adam"]


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "lbfgs"            # lbfgs | adam
    max_iters: int = 5000
    grad_tol: float = 1e-9
    loss_tol: float = 1e-12
    memory: int = 10               # L-BFGS history length
    c1: float = 1e-4               # sufficient-decrease constant
    c2: float = 0.9                # curvature constant
    step_size: float = 1e-3        # Adam
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2 < 1.0):
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.kind not in ("lbfgs", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    """One HANN training run: homotopy, sampling, architecture, optimizer."""

    gamma: float = 0.01
    n_collocation: int = 1000
    hidden: Tuple[int, ...] = (40, 40, 40, 40)
    w_iv: float = 1.0
    w_h: float = 1.0
    seed: int = 1234
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def layer_sizes(self, n_outputs: int):
        return (1,) + tuple(self.hidden) + (n_outputs,)


@dataclass
class TrainingHistory:
    losses: List[float] = field(default_factory=list)
    status: str = "converged"
    n_iters: int = 0
    wall_time: float = 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss"])
            for i, loss in enumerate(self.losses):
                writer.writerow([i, repr(loss)])


def assemble_loss(spec: LossSpec, params: NetworkParams) -> float:
    """The exact quantity the optimizers differentiate (shared code path)."""
    loss, _ = loss_and_grad(params, spec)
    return loss


# ---------------------------------------------------------------------------
# L-BFGS

def _interpolate(a_lo, f_lo, g_lo, a_hi, f_hi):
    """Quadratic-interpolation minimizer on [a_lo, a_hi], safeguarded."""
    denom = 2.0 * (f_hi - f_lo - g_lo * (a_hi - a_lo))
    if denom != 0.0 and np.isfinite(denom):
        a = a_lo - g_lo * (a_hi - a_lo) ** 2 / denom
    else:
        a = 0.5 * (a_lo + a_hi)
    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
    span = hi - lo
    if not np.isfinite(a) or a <= lo + 1e-3 * span or a >= hi - 1e-3 * span:
        a = 0.5 * (a_lo + a_hi)
    return a


def _zoom(phi, a_lo, f_lo, g_lo, a_hi, f_hi, f0, g0, c1, c2, max_steps=30):
    for _ in range(max_steps):
        a = _interpolate(a_lo, f_lo, g_lo, a_hi, f_hi)
        f, g = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * g0 or f >= f_lo:
            a_hi, f_hi = a, f
        else:
            if abs(g) <= -c2 * g0:
                return a, f, g, True
            if g * (a_hi - a_lo) >= 0.0:
                a_hi, f_hi = a_lo, f_lo
            a_lo, f_lo, g_lo = a, f, g
        if abs(a_hi - a_lo) < 1e-16:
            break
    # fall back to the best sufficient-decrease point seen
    if np.isfinite(f_lo) and f_lo < f0:
        return a_lo, f_lo, g_lo, True
    return a_lo, f_lo, g_lo, False


def _strong_wolfe(phi, f0, g0, c1, c2, a_init=1.0, max_steps=25):
    """Line search returning (alpha, f, dphi, ok); phi(a) -> (f, dphi)."""
    a_prev, f_prev, g_prev = 0.0, f0, g0
    a = a_init
    for i in range(max_steps):
        f, g = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * g0 or (f >= f_prev and i > 0):
            return _zoom(phi, a_prev, f_prev, g_prev, a, f, f0, g0, c1, c2)
        if abs(g) <= -c2 * g0:
            return a, f, g, True
        if g >= 0.0:
            return _zoom(phi, a, f, g, a_prev, f_prev, f0, g0, c1, c2)
        a_prev, f_prev, g_prev = a, f, g
        a *= 2.0
    return a_prev, f_prev, g_prev, f_prev < f0


def minimize_lbfgs(fun: Callable, x0: np.ndarray, cfg: OptimizerConfig):
    """L-BFGS over fun(x) -> (loss, grad); returns (x, TrainingHistory).

    The accepted-loss sequence is non-increasing; terminal statuses are
    converged, budget-exhausted, line-search-stop or error.
    """
    t_start = time.perf_counter()
    history = TrainingHistory()
    x = np.array(x0, dtype=float)
    try:
        f, g = fun(x)
    except NonFiniteLossError:
        history.status = "error"
        history.wall_time = time.perf_counter() - t_start
        return x, history
    history.losses.append(f)

    s_list, y_list, rho_list = [], [], []
    gnorm = float(np.linalg.norm(g, np.inf))
    if gnorm <= cfg.grad_tol:
        history.status = "converged"
        history.wall_time = time.perf_counter() - t_start
        return x, history

    def safe_fun(z):
        try:
            return fun(z)
        except NonFiniteLossError:
            return float("inf"), np.full_like(z, np.nan)

    for it in range(cfg.max_iters):
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list),
                             reversed(rho_list)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_list:
            y_last, s_last = y_list[-1], s_list[-1]
            q *= (s_last @ y_last) / (y_last @ y_last)
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list),
                                  reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = -q
        dphi0 = float(g @ p)
        if dphi0 >= 0.0:  # not a descent direction; restart from steepest
            p = -g
            dphi0 = float(g @ p)
            s_list, y_list, rho_list = [], [], []

        cache = {}

        def phi(a):
            z = x + a * p
            fz, gz = safe_fun(z)
            cache[a] = (z, gz)
            return fz, float(gz @ p) if np.all(np.isfinite(gz)) else np.nan

        a_init = 1.0 if y_list else min(1.0, 1.0 / max(1e-12,
                                                       np.linalg.norm(g)))
        alpha, f_new, _, ok = _strong_wolfe(phi, f, dphi0, cfg.c1, cfg.c2,
                                            a_init=a_init)
        if not ok or alpha == 0.0 or not np.isfinite(f_new) or f_new > f:
            history.status = "line-search-stop"
            break
        x_new, g_new = cache[alpha]
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > cfg.memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        loss_drop = f - f_new
        x, f, g = x_new, f_new, g_new
        history.losses.append(f)
        history.n_iters = it + 1
        gnorm = float(np.linalg.norm(g, np.inf))
        if gnorm <= cfg.grad_tol or loss_drop <= cfg.loss_tol:
            history.status = "converged"
            break
    else:
        history.status = "budget-exhausted"
    history.wall_time = time.perf_counter() - t_start
    return x, history


def lbfgs_minimize(params0: NetworkParams, spec: LossSpec,
                   cfg: OptimizerConfig):
    if cfg.kind != "lbfgs":
        raise ValueError("config kind must be 'lbfgs'")
    fun = lambda theta: loss_and_grad(
        NetworkParams(params0.layer_sizes, theta), spec)
    theta, history = minimize_lbfgs(fun, params0.theta, cfg)
    return NetworkParams(params0.layer_sizes, theta), history


# ---------------------------------------------------------------------------
# Adam

def minimize_adam(fun: Callable, x0: np.ndarray, cfg: OptimizerConfig):
    """Adam with bias correction over a fixed iteration budget."""
    t_start = time.perf_counter()
    history = TrainingHistory()
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x = x.copy()
    best_f = np.inf
    status = "budget-exhausted"
    for it in range(cfg.max_iters):
        try:
            f, g = fun(x)
        except NonFiniteLossError:
            status = "error"
            break
        history.losses.append(f)
        history.n_iters = it + 1
        if f < best_f:
            best_f, best_x = f, x.copy()
        if float(np.linalg.norm(g, np.inf)) <= cfg.grad_tol:
            status = "converged"
            break
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** (it + 1))
        v_hat = v / (1.0 - cfg.beta2 ** (it + 1))
        x = x - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.eps)
    history.status = status
    history.wall_time = time.perf_counter() - t_start
    return best_x if status == "error" else x, history


def adam_minimize(params0: NetworkParams, spec: LossSpec,
                  cfg: OptimizerConfig):
    if cfg.kind != "adam":
        raise ValueError("config kind must be 'adam'")
    fun = lambda theta: loss_and_grad(
        NetworkParams(params0.layer_sizes, theta), spec)
    theta, history = minimize_adam(fun, params0.theta, cfg)
    return NetworkParams(params0.layer_sizes, theta), history
