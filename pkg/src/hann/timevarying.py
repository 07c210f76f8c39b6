"""Direct training of time-parameterized systems F(x(t), t) = 0.

No homotopy embedding: the time variable is already the natural network
input.  It is affinely rescaled to [0, 1] before entering the network so
tanh activations stay in a healthy range on wide time windows.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .autodiff import LossSpec, NonFiniteLossError
from .expr import DomainError, System
from .net import NetworkParams, forward_batch, init_xavier
from .sampling import SamplePlan, latin_hypercube
from .solver import newton_refine
from .train import TrainConfig, adam_minimize, lbfgs_minimize

__all__ = ["TimeVaryingProblem", "Trajectory", "compute_anchors",
           "solve_time_varying"]

_ANCHOR_TOL = 1e-8


@dataclass(frozen=True)
class TimeVaryingProblem:
    system: System
    t_domain: Tuple[float, float]
    anchors: Optional[np.ndarray] = None  # x*(a); solved from a hint if absent

    def __post_init__(self):
        if self.system.time_var is None:
            raise ValueError("system has no reserved time symbol; add a "
                             "'time: t' line")
        a, b = self.t_domain
        if not a < b:
            raise ValueError(f"invalid time domain [{a}, {b}]")
        if self.anchors is not None:
            object.__setattr__(self, "anchors",
                               np.asarray(self.anchors, dtype=float))

    def frozen_at(self, t: float) -> System:
        """The square static system F(x, t) = 0 at a fixed time."""
        sub = {self.system.time_var: t}
        eqs = tuple(_substitute(eq, sub) for eq in self.system.equations)
        return System(equations=eqs, variables=self.system.variables,
                      domain=self.system.domain)


def _substitute(expr, values):
    from .expr import Binary, Const, Unary, Var
    if isinstance(expr, Var):
        return Const(float(values[expr.name])) if expr.name in values else expr
    if isinstance(expr, Unary):
        return Unary(expr.op, _substitute(expr.arg, values))
    if isinstance(expr, Binary):
        return Binary(expr.op, _substitute(expr.left, values),
                      _substitute(expr.right, values))
    return expr


@dataclass
class Trajectory:
    ts: np.ndarray
    xs: np.ndarray            # (grid, n)
    residuals: np.ndarray     # per-equation |f_j|, shape (grid, n_eq)
    errors: Optional[np.ndarray]  # |x - exact| when exact solutions known
    loss_history: list
    status: str
    anchors: np.ndarray
    params: NetworkParams

    def to_csv(self, path, variable_names=None):
        names = variable_names or [f"x_{i+1}" for i in range(self.xs.shape[1])]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t"] + list(names) + \
                [f"residual_{j+1}" for j in range(self.residuals.shape[1])]
            if self.errors is not None:
                header += [f"abs_error_{n}" for n in names]
            writer.writerow(header)
            for i, t in enumerate(self.ts):
                row = [repr(float(t))]
                row += [repr(float(v)) for v in self.xs[i]]
                row += [repr(float(v)) for v in self.residuals[i]]
                if self.errors is not None:
                    row += [repr(float(v)) for v in self.errors[i]]
                writer.writerow(row)


def compute_anchors(problem: TimeVaryingProblem, hint) -> np.ndarray:
    """Roots of F(x, a) = 0 near the hint, via Newton refinement.

    Sign ambiguities (squared unknowns) are resolved by the hint's basin.
    """
    a, _ = problem.t_domain
    frozen = problem.frozen_at(a)
    result = newton_refine(frozen, np.asarray(hint, dtype=float),
                           max_iters=100, tol=_ANCHOR_TOL)
    if result.residual > _ANCHOR_TOL:
        raise ValueError("anchor solve failed: residual "
                         f"{result.residual:.3e} from the given hint; "
                         "supply anchors explicitly")
    return result.x_final


def solve_time_varying(problem: TimeVaryingProblem, cfg: TrainConfig,
                       grid_points: int = 1001,
                       exact: Optional[Callable] = None,
                       anchor_hint=None) -> Trajectory:
    """Train x(t) on LHS-sampled times and return a dense evaluation table.

    ``exact`` maps a time array to exact solutions of shape (grid, n) and
    fills the absolute-error columns when given.
    """
    a, b = problem.t_domain
    sys = problem.system
    if problem.anchors is not None:
        anchors = problem.anchors
    else:
        if anchor_hint is None:
            raise ValueError("no anchors stored and no hint given")
        anchors = compute_anchors(problem, anchor_hint)

    plan = SamplePlan(count=cfg.n_collocation, dims=1, bounds=((a, b),),
                      seed=cfg.seed)
    ts = latin_hypercube(plan)[:, 0]
    ts = np.concatenate(([a], ts))  # the anchor time joins the residual term

    params0 = init_xavier(cfg.layer_sizes(sys.n_variables), cfg.seed)
    # start from the constant-anchor trajectory: the output-layer bias is
    # set to x*(a) so the first loss evaluation stays inside the domain of
    # ln/1-over-x style equations
    theta = params0.theta.copy()
    theta[-sys.n_variables:] = anchors
    params0 = NetworkParams(params0.layer_sizes, theta)
    spec = LossSpec(mode="time-varying", problem=problem, anchor=anchors,
                    collocation=ts, w_iv=cfg.w_iv, w_h=cfg.w_h)
    minimize = lbfgs_minimize if cfg.optimizer.kind == "lbfgs" else adam_minimize
    params, history = minimize(params0, spec, cfg.optimizer)

    grid = np.linspace(a, b, grid_points)
    xs = forward_batch(params, (grid - a) / (b - a))
    residuals = np.full((grid_points, sys.n_equations), np.nan)
    try:
        residuals[:] = np.abs(sys.eval_batch(xs, t=grid)).T
    except DomainError:  # mark non-evaluable grid points, keep the rest
        for i, t in enumerate(grid):
            try:
                residuals[i] = np.abs(sys.eval_batch(xs[i], t=t))
            except DomainError:
                pass
    errors = None
    if exact is not None:
        errors = np.abs(xs - np.asarray(exact(grid), dtype=float))
    return Trajectory(ts=grid, xs=xs, residuals=residuals, errors=errors,
                      loss_history=list(history.losses),
                      status=history.status, anchors=anchors, params=params)
