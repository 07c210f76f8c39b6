"""Solve drivers: single training run (HANN-1), best-of-loop (HANN-2),
multi-start orchestration, solution deduplication and Newton refinement."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .autodiff import LossSpec, NonFiniteLossError
from .expr import DomainError, System, eval_system, jacobian, residual_l1
from .homotopy import build_homotopy
from .net import NetworkParams, forward, init_xavier
from .sampling import SamplePlan, latin_hypercube
from .train import (OptimizerConfig, TrainConfig, TrainingHistory,
                    adam_minimize, lbfgs_minimize)

__all__ = ["SolveResult", "Cluster", "SolutionSet",
           "hann1", "hann2", "multistart", "dedup", "newton_refine"]

_HANN2_STALL_LIMIT = 10


@dataclass
class SolveResult:
    x_final: np.ndarray
    residual: float
    loss_history: List[float]
    x0: np.ndarray
    seed: int
    wall_time: float
    status: str  # converged | budget-exhausted | line-search-stop | error
    n_iters: int = 0
    params: Optional[NetworkParams] = None

    def to_record(self, with_timing=True):
        rec = {
            "x_final": [float(v) for v in np.atleast_1d(self.x_final)],
            "residual": float(self.residual),
            "x0": [float(v) for v in np.atleast_1d(self.x0)],
            "seed": int(self.seed),
            "status": self.status,
            "n_iters": int(self.n_iters),
        }
        if with_timing:
            rec["wall_time"] = self.wall_time
        return rec


@dataclass
class Cluster:
    representative: np.ndarray
    members: List[int]
    min_residual: float


@dataclass
class SolutionSet:
    results: List[SolveResult]
    clusters: List[Cluster]
    threshold: float

    def summary(self):
        return {
            "n_runs": len(self.results),
            "n_failed": sum(1 for r in self.results if r.status == "error"),
            "threshold": self.threshold,
            "clusters": [
                {
                    "representative": [float(v)
                                       for v in np.atleast_1d(c.representative)],
                    "size": len(c.members),
                    "min_residual": float(c.min_residual),
                }
                for c in self.clusters
            ],
        }

    def to_jsonl(self, path):
        """One record per raw run plus a trailing summary record."""
        with open(path, "w") as fh:
            for i, r in enumerate(self.results):
                rec = {"kind": "run", "index": i}
                rec.update(r.to_record())
                fh.write(json.dumps(rec) + "\n")
            fh.write(json.dumps({"kind": "summary", **self.summary()}) + "\n")

    def to_csv(self, path):
        """(initial value, final value, residual) rows for scatter plots."""
        import csv
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            n = len(np.atleast_1d(self.results[0].x0)) if self.results else 0
            header = [f"x0_{i}" for i in range(n)] + \
                [f"x_{i}" for i in range(n)] + ["residual", "status"]
            writer.writerow(header)
            for r in self.results:
                row = [repr(float(v)) for v in np.atleast_1d(r.x0)]
                row += [repr(float(v)) for v in np.atleast_1d(r.x_final)]
                row += [repr(float(r.residual)), r.status]
                writer.writerow(row)


def _check_square(sys: System):
    if sys.time_var is not None:
        raise ValueError("use the time-varying solver for systems with a "
                         "time symbol")
    if sys.n_equations != sys.n_variables:
        raise ValueError(f"square system required: {sys.n_equations} "
                         f"equations over {sys.n_variables} variables")


def hann1(sys: System, x0, cfg: TrainConfig) -> SolveResult:
    """One homotopy-network training run; the solution is read off at t=1."""
    _check_square(sys)
    x0 = np.asarray(x0, dtype=float)
    t_start = time.perf_counter()
    hp = build_homotopy(sys, x0, cfg.gamma)  # raises for inadmissible anchors

    plan = SamplePlan(count=cfg.n_collocation, dims=1,
                      bounds=((0.0, 1.0),), seed=cfg.seed)
    ts = latin_hypercube(plan)[:, 0]
    params0 = init_xavier(cfg.layer_sizes(sys.n_variables), cfg.seed)
    # start the path at the constant-anchor curve: the output bias is set to
    # x0 so the first iterate sits where H(x, 0) = 0 already holds, instead
    # of near the origin where equations like 1/x blow up
    theta = params0.theta.copy()
    theta[-sys.n_variables:] = x0
    params0 = NetworkParams(params0.layer_sizes, theta)
    spec = LossSpec(mode="homotopy", problem=hp, anchor=x0,
                    collocation=ts, w_iv=cfg.w_iv, w_h=cfg.w_h)

    minimize = lbfgs_minimize if cfg.optimizer.kind == "lbfgs" else adam_minimize
    try:
        params, history = minimize(params0, spec, cfg.optimizer)
        x_final = forward(params, 1.0)
        residual = residual_l1(sys, x_final)
        status = history.status
    except (NonFiniteLossError, DomainError, FloatingPointError):
        params, history = params0, TrainingHistory(status="error")
        x_final = x0.copy()
        try:
            residual = residual_l1(sys, x_final)
        except DomainError:
            residual = float("inf")
        status = "error"
    if not np.isfinite(residual):
        status = "error"
    return SolveResult(x_final=np.atleast_1d(x_final), residual=residual,
                       loss_history=list(history.losses), x0=x0,
                       seed=cfg.seed, wall_time=time.perf_counter() - t_start,
                       status=status, n_iters=history.n_iters, params=params)


def hann2(sys: System, x0, n_max: int, cfg: TrainConfig) -> SolveResult:
    """Repeated HANN-1 with best-residual tracking.

    Each accepted solution becomes the next anchor.  Iteration k derives its
    seed as cfg.seed + k (k = 0, 1, ...), so iteration 0 reproduces the
    plain hann1 run, and resamples collocation points.  The loop stops when
    the best is not updated for more than ten consecutive iterations or the
    iteration count exceeds n_max.
    """
    _check_square(sys)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    eval_system(sys, x0)  # only an inadmissible initial anchor is fatal
    t_start = time.perf_counter()

    ans_f = 1000.0
    ans_x = x0.copy()
    anchor = x0.copy()
    num_t = 0
    num_l = 0
    losses: List[float] = []
    total_iters = 0
    status = "budget-exhausted"
    while num_t <= n_max:
        inner_cfg = TrainConfig(gamma=cfg.gamma,
                                n_collocation=cfg.n_collocation,
                                hidden=cfg.hidden, w_iv=cfg.w_iv,
                                w_h=cfg.w_h, seed=cfg.seed + num_t,
                                optimizer=cfg.optimizer)
        try:
            run = hann1(sys, anchor, inner_cfg)
        except (DomainError, ValueError):
            run = None
        if run is not None and run.status != "error" \
                and np.isfinite(run.residual) and run.residual <= ans_f:
            ans_x = run.x_final.copy()
            anchor = run.x_final.copy()
            ans_f = run.residual
            num_l = 0
            losses.extend(run.loss_history)
            total_iters += run.n_iters
            status = run.status
        else:
            num_l += 1
        num_t += 1
        if num_l > _HANN2_STALL_LIMIT:
            break
    try:  # never report the stale sentinel; the residual is recomputed
        ans_f = residual_l1(sys, ans_x)
    except DomainError:
        ans_f = float("inf")
        status = "error"
    return SolveResult(x_final=np.atleast_1d(ans_x), residual=float(ans_f),
                       loss_history=losses, x0=x0, seed=cfg.seed,
                       wall_time=time.perf_counter() - t_start,
                       status=status, n_iters=total_iters)


def dedup(points, threshold: float, residuals=None) -> List[Cluster]:
    """Greedy clustering in input order under a max-norm threshold.

    A point joins the first cluster whose founding point is within the
    threshold, else founds a new cluster.  The reported representative is
    the member with the smallest residual.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if residuals is None:
        residuals = [0.0] * len(points)
    founders: List[np.ndarray] = []
    clusters: List[Cluster] = []
    for i, (p, r) in enumerate(zip(points, residuals)):
        placed = False
        for c, founder in zip(clusters, founders):
            if np.max(np.abs(p - founder)) < threshold:
                c.members.append(i)
                if r < c.min_residual:
                    c.min_residual = r
                    c.representative = p
                placed = True
                break
        if not placed:
            founders.append(p)
            clusters.append(Cluster(representative=p, members=[i],
                                    min_residual=float(r)))
    return clusters


def _run_one(args):
    sys, x0, cfg, algo, n_max = args
    try:
        if algo == "hann1":
            return hann1(sys, x0, cfg)
        return hann2(sys, x0, n_max, cfg)
    except DomainError:  # inadmissible anchor: recorded, never fatal
        return SolveResult(x_final=np.atleast_1d(x0), residual=float("inf"),
                           loss_history=[], x0=np.atleast_1d(x0),
                           seed=cfg.seed, wall_time=0.0, status="error")


def multistart(sys: System, initials, cfg: TrainConfig, algo="hann1",
               n_max=10, threshold=1e-2, jobs=1) -> SolutionSet:
    """One solve per anchor, results in input order, then deduplicated.

    Inadmissible anchors and failed runs are kept as status=error records
    and excluded from clustering, as are solutions that leave the system's
    domain box (the problem is posed on the box, so a root outside it is
    recorded but not counted).
    """
    if algo not in ("hann1", "hann2"):
        raise ValueError(f"unknown algorithm {algo!r}")
    initials = [np.atleast_1d(np.asarray(p, dtype=float)) for p in initials]
    if not initials:
        raise ValueError("no initial values given")

    tasks = [(sys, x0, cfg, algo, n_max) for x0 in initials]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        results = [_run_one(t) for t in tasks]

    lo = np.array([d[0] for d in sys.domain])
    hi = np.array([d[1] for d in sys.domain])
    good = [(i, r) for i, r in enumerate(results) if r.status != "error"
            and np.isfinite(r.residual)
            and np.all(r.x_final >= lo) and np.all(r.x_final <= hi)]
    clusters = dedup([r.x_final for _, r in good], threshold,
                     [r.residual for _, r in good])
    # remap member indices back to the raw result list
    index_map = [i for i, _ in good]
    for c in clusters:
        c.members = [index_map[m] for m in c.members]
    return SolutionSet(results=results, clusters=clusters,
                       threshold=threshold)


def newton_refine(sys: System, point, max_iters: int = 50,
                  tol: float = 1e-12) -> SolveResult:
    """Damped Newton polish; never returns a point worse than the input."""
    _check_square(sys)
    t_start = time.perf_counter()
    x = np.asarray(point, dtype=float).copy()
    try:
        r = residual_l1(sys, x)
    except DomainError:
        return SolveResult(x_final=x, residual=float("inf"), loss_history=[],
                           x0=np.asarray(point, dtype=float), seed=0,
                           wall_time=time.perf_counter() - t_start,
                           status="error")
    best_x, best_r = x.copy(), r
    status = "budget-exhausted"
    n_done = 0
    if r <= tol:
        status = "converged"
        max_iters = 0
    for it in range(max_iters):
        try:
            jac = jacobian(sys, x)
            fx = eval_system(sys, x)
            step = np.linalg.solve(jac, -fx)
        except (DomainError, np.linalg.LinAlgError):
            status = "error"
            break
        if not np.all(np.isfinite(step)):
            status = "error"
            break
        lam = 1.0
        improved = False
        while lam >= 2.0 ** -30:
            trial = x + lam * step
            try:
                r_trial = residual_l1(sys, trial)
            except DomainError:
                lam *= 0.5
                continue
            if r_trial < best_r:
                x, best_r = trial, r_trial
                best_x = trial.copy()
                improved = True
                break
            lam *= 0.5
        n_done = it + 1
        if not improved:
            status = "line-search-stop"
            break
        if best_r <= tol:
            status = "converged"
            break
    return SolveResult(x_final=best_x, residual=float(best_r),
                       loss_history=[], x0=np.asarray(point, dtype=float),
                       seed=0, wall_time=time.perf_counter() - t_start,
                       status=status, n_iters=n_done)
