"""Built-in benchmark problems with their published configurations,
reference values, and sweep drivers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from itertools import product
from typing import List, Optional

import numpy as np

from .expr import DomainError, System, parse_system, residual_l1
from .sampling import SamplePlan, latin_hypercube, midpoint_grid, random_in_cell
from .solver import SolutionSet, hann1
from .timevarying import TimeVaryingProblem
from .train import OptimizerConfig, TrainConfig

__all__ = ["BenchmarkCase", "builtin", "BENCHMARK_NAMES", "sweep",
           "compare_reference", "emit_plot_data"]

BENCHMARK_NAMES = ("single-eq", "abs-system", "trig-system", "interval10",
                   "combustion10", "time-varying")

_SINGLE_EQ_SRC = """\
vars: x
domain: x in [-40, 0]
1/x - sin(x) + 1 = 0
"""

_ABS_SYSTEM_SRC = """\
vars: x, y
domain: x in [-15, 15]
domain: y in [-15, 15]
x^2 - y^2 = 0
1 - |x - y| = 0
"""

_TRIG_SYSTEM_SRC = """\
vars: x1, x2
domain: x1 in [-5, 5]
domain: x2 in [-5, 5]
2*(x2 - x1) + sin(2*x2) - sin(2*x1) - 1.2 = 0
cos(2*x1) - cos(2*x2) - 0.4 = 0
"""

_INTERVAL10_SRC = """\
vars: x1, x2, x3, x4, x5, x6, x7, x8, x9, x10
domain: x1 in [-30, 30]
domain: x2 in [-30, 30]
domain: x3 in [-30, 30]
domain: x4 in [-30, 30]
domain: x5 in [-30, 30]
domain: x6 in [-30, 30]
domain: x7 in [-30, 30]
domain: x8 in [-30, 30]
domain: x9 in [-30, 30]
domain: x10 in [-30, 30]
x1 - 0.25428722 - 0.18324757*x4*x3*x9 = 0
x2 - 0.37842197 - 0.16275449*x1*x10*x6 = 0
x3 - 0.27162577 - 0.16955071*x1*x2*x10 = 0
x4 - 0.19807914 - 0.15585316*x7*x1*x6 = 0
x5 - 0.44166728 - 0.19950920*x7*x6*x3 = 0
x6 - 0.14654113 - 0.18922793*x8*x5*x10 = 0
x7 - 0.42937161 - 0.21180486*x2*x5*x8 = 0
x8 - 0.07056438 - 0.17081208*x1*x7*x6 = 0
x9 - 0.34504906 - 0.19612740*x10*x6*x8 = 0
x10 - 0.42651102 - 0.21466544*x4*x8*x1 = 0
"""

_COMBUSTION10_SRC = """\
vars: x1, x2, x3, x4, x5, x6, x7, x8, x9, x10
x2 + 2*x6 + x9 + 2*x10 = 1e-5
x3 + x8 = 3e-5
x1 + x3 + 2*x5 + 2*x8 + x9 + x10 = 5e-5
x4 + 2*x7 = 1e-5
0.5140437e-7*x5 = x1^2
0.1006932e-6*x6 = 2*x2^2
0.7816278e-15*x7 = x4^2
0.1496236e-6*x8 = x1*x3
0.6194411e-7*x9 = x1*x2
0.2089296e-14*x10 = x1*x2^2
"""

# x4 enters the fourth equation linearly; a squared x4 would contradict the
# closed-form trajectory below and admit a second, branch-switching solution.
_TIME_VARYING_SRC = """\
vars: x1, x2, x3, x4
time: t
ln(x1) - 1/(t + 1) = 0
x1*x2 - exp(1/(t + 1))*sin(t) = 0
x1^2 - sin(t)*x2 + x3 - 2 = 0
x1^2 - x2^2 + x3 + x4 - t = 0
"""


def time_varying_exact(ts):
    """Closed-form trajectory used for verification, shape (len(ts), 4)."""
    ts = np.asarray(ts, dtype=float)
    x1 = np.exp(1.0 / (ts + 1.0))
    x2 = np.sin(ts)
    x3 = 2.0 - np.exp(2.0 / (ts + 1.0)) + np.sin(ts) ** 2
    x4 = ts - 2.0
    return np.stack([x1, x2, x3, x4], axis=1)


# Published residuals of competing methods on the trigonometric system;
# display-only constants, never training targets.
TRIG_COMPETITORS = (
    ("Newton's method", (0.15, 0.49), (-1.68e-03, 1.5e-02)),
    ("Secant method", (0.15, 0.49), (-1.68e-03, 1.5e-02)),
    ("Broyden's method", (0.15, 0.49), (-1.68e-03, 1.5e-02)),
    ("Effati's method", (0.1575, 0.4970), (5.46e-03, 7.39e-03)),
    ("Evolutionary approach", (0.15772, 0.49458), (1.26e-03, 9.69e-04)),
)

# Nine refined solutions of the interval-arithmetic system with their
# published residuals.
INTERVAL10_REFINED = (
    ((-2.412220977, -2.290323698, -2.111011823, -2.221227578, -2.269731897,
      -2.66909418, -2.412273916, -2.581165424, -3.098083885, -2.544602352),
     9.36e-11),
    ((-2.068464124, 2.358431355, 2.102111246, 2.397098585, -2.418618802,
      2.657862106, -2.566873252, 2.48082643, -2.515310589, -2.212241962),
     2.39e-13),
    ((-0.017212478, 0.410907113, 0.367100602, 10.06725143, -269.1777816,
      14.44662791, -254.8257341, 10.89577516, -0.430031337, -0.025758793),
     3.88e-08),
    ((-0.014075949, 0.397708215, 0.298453759, 11.78783966, -314.0994619,
      15.64990574, -337.5436885, 12.77344875, -0.444130318, -0.020424264),
     6.14e-07),
    ((-0.006496133, 0.358320826, 0.157988754, 14.77312841, -453.394766,
      26.08755186, -551.9110857, 16.05172001, -1.109535738, -0.018833827),
     1.31e-08),
    ((0.257431972, 0.380809764, 0.279386975, 0.200718638, 0.444888448,
      0.145833685, 0.430201613, 0.073404607, 0.346064111, 0.427182476),
     1.41e-14),
    ((1.843705186, 1.969576487, 1.620416551, 2.085091918, 2.562787287,
      2.419666215, 2.716139943, 2.138655983, 2.569032396, 2.191674122),
     2.74e-12),
    ((2.06179032, -1.864657949, -1.402607323, -2.033457959, 2.385743371,
      -2.604983832, 2.666905401, -2.375158355, 3.458373215, 2.56712054),
     6.64e-13),
    ((2.420875356, -1.961971859, -1.937699599, -1.998564649, 2.3727384,
      -2.276614347, 2.395151577, -2.105137056, 2.903343349, 2.643858443),
     2.96e-09),
)

# (seed, constant initial value, published residual) rows for the
# combustion system.
COMBUSTION_ROWS = (
    (1, 0.0, 1.682803e-02),
    (12, 0.0, 1.327700e-02),
    (123, 0.0, 9.948402e-03),
    (9999, 0.0, 1.046578e-02),
    (1234, 0.0, 1.576982e-02),
    (1234, 1.0, 8.931228e-03),
    (1234, 2.0, 6.449540e-03),
    (1234, -1.0, 2.010216e-02),
)

# Gamma study on the single equation: (gamma, solution, residual).
GAMMA_TABLE = (
    (5.0, -10.50394063, 2.323479e-02),
    (1.0, -17.66053462, 1.537179e-02),
    (0.1, -16.91877944, 4.990269e-03),
    (0.01, -17.61766674, 1.202379e-04),
    (0.001, -17.61837379, 3.578146e-04),
    (0.0001, -17.61923255, 6.470036e-04),
    (0.00001, -17.61945523, 7.221054e-04),
)

SINGLE_EQ_SUBDIVISIONS = (2, 4, 8, 16, 32, 40)


@dataclass
class BenchmarkCase:
    name: str
    system: System
    config: TrainConfig
    scheme: str                     # midpoint-grid | grid | random-in-cell |
                                    # lhs | fixed-rows
    scheme_params: dict
    dedup_threshold: float
    reference: dict
    time_problem: Optional[TimeVaryingProblem] = None

    def initial_values(self, subdivisions=None, seed=None, count=None):
        """Anchor points for a multi-start run, per the case's scheme."""
        dom = self.system.domain
        if self.scheme == "midpoint-grid":
            m = subdivisions or self.scheme_params["subdivisions"]
            return midpoint_grid(dom, [m] * len(dom))
        if self.scheme == "grid":
            m = subdivisions or self.scheme_params["points_per_dim"]
            axes = [np.linspace(lo, hi, m) for lo, hi in dom]
            return np.array(list(product(*axes)))
        if self.scheme == "random-in-cell":
            m = subdivisions or self.scheme_params["subdivisions"]
            s = self.config.seed if seed is None else seed
            return random_in_cell(dom, [m] * len(dom), s)
        if self.scheme == "lhs":
            n = count or self.scheme_params["count"]
            s = self.config.seed if seed is None else seed
            plan = SamplePlan(count=n, dims=len(dom), bounds=tuple(dom),
                              seed=s)
            return latin_hypercube(plan)
        if self.scheme == "fixed-rows":
            n = self.system.n_variables
            return np.array([[v] * n for _, v, _ in COMBUSTION_ROWS])
        raise ValueError(f"unknown scheme {self.scheme!r}")


def _validate_exact_roots(case):
    for root in case.reference.get("exact_roots", ()):
        r = residual_l1(case.system, root)
        if r > 1e-10:
            raise AssertionError(f"stored exact root {root} of {case.name} "
                                 f"has residual {r:.3e}")


def builtin(name: str) -> BenchmarkCase:
    """Fully configured benchmark case matching the published settings."""
    if name == "single-eq":
        case = BenchmarkCase(
            name=name,
            system=parse_system(_SINGLE_EQ_SRC),
            config=TrainConfig(gamma=0.01, n_collocation=1000,
                               hidden=(40, 40, 40, 40), seed=1234),
            scheme="midpoint-grid",
            scheme_params={"subdivisions": 32},
            dedup_threshold=4.66e-2,
            reference={"root_count": 13, "max_residual": 6.26e-3,
                       "gamma_table": GAMMA_TABLE,
                       "sweep_anchor": [-15.0],
                       "subdivision_choices": SINGLE_EQ_SUBDIVISIONS},
        )
    elif name == "abs-system":
        case = BenchmarkCase(
            name=name,
            system=parse_system(_ABS_SYSTEM_SRC),
            config=TrainConfig(gamma=0.01, n_collocation=1000,
                               hidden=(40, 40, 40, 40), seed=1234),
            scheme="grid",
            scheme_params={"points_per_dim": 7},
            dedup_threshold=3.54e-2,
            reference={"exact_roots": [[0.5, -0.5], [-0.5, 0.5]],
                       "root_count": 2, "sweep_anchor": [0.0, 0.0]},
        )
    elif name == "trig-system":
        case = BenchmarkCase(
            name=name,
            system=parse_system(_TRIG_SYSTEM_SRC),
            config=TrainConfig(gamma=0.01, n_collocation=1000,
                               hidden=(40, 40, 40, 40), seed=1234),
            scheme="random-in-cell",
            scheme_params={"subdivisions": 10},
            dedup_threshold=1.08e-2,
            reference={"root_count": 8,
                       "known_root": [0.157, 0.494],
                       "competitors": TRIG_COMPETITORS,
                       "sweep_anchor": [0.0, 0.0]},
        )
    elif name == "interval10":
        case = BenchmarkCase(
            name=name,
            system=parse_system(_INTERVAL10_SRC),
            # single runs from far-out anchors stall in local minima no
            # matter the budget, so keep runs short and rely on re-anchored
            # iteration (hann2) to reach low residuals
            config=TrainConfig(gamma=0.0001, n_collocation=5,
                               hidden=(2, 2), seed=1234,
                               optimizer=OptimizerConfig(max_iters=1000)),
            scheme="lhs",
            scheme_params={"count": 200},
            dedup_threshold=5e-2,
            reference={"refined_points": INTERVAL10_REFINED,
                       "expected_coarse_solutions": 16,
                       "sweep_anchor": [0.0] * 10},
        )
    elif name == "combustion10":
        case = BenchmarkCase(
            name=name,
            system=parse_system(_COMBUSTION10_SRC),
            config=TrainConfig(gamma=0.01, n_collocation=1000,
                               hidden=(40, 40, 40, 40), seed=1234),
            scheme="fixed-rows",
            scheme_params={},
            dedup_threshold=1e-2,
            reference={"rows": COMBUSTION_ROWS,
                       "sweep_anchor": [0.0] * 10},
        )
    elif name == "time-varying":
        sys = parse_system(_TIME_VARYING_SRC)
        # the fast transient right after t=0 dominates the x3 error; it
        # needs extra network capacity, denser collocation, and a deep
        # L-BFGS history to fit below 2e-2
        case = BenchmarkCase(
            name=name,
            system=sys,
            config=TrainConfig(gamma=0.01, n_collocation=2000,
                               hidden=(60, 60, 60, 60), seed=1234,
                               optimizer=OptimizerConfig(max_iters=25000,
                                                         memory=50)),
            scheme="fixed-rows",
            scheme_params={},
            dedup_threshold=1e-2,
            reference={"exact": time_varying_exact,
                       "anchor_hint": [2.5, 0.0, -5.0, -2.0],
                       "max_error_x1": 1.12e-2},
            time_problem=TimeVaryingProblem(system=sys, t_domain=(0.0, 10.0)),
        )
    else:
        raise ValueError(f"unknown benchmark {name!r}; choose from "
                         f"{BENCHMARK_NAMES}")
    _validate_exact_roots(case)
    return case


def scaled_combustion_system() -> System:
    """Opt-in variant of the combustion system under x_i = 1e-5 * z_i."""
    lines = ["vars: z1, z2, z3, z4, z5, z6, z7, z8, z9, z10",
             "z2 + 2*z6 + z9 + 2*z10 = 1",
             "z3 + z8 = 3",
             "z1 + z3 + 2*z5 + 2*z8 + z9 + z10 = 5",
             "z4 + 2*z7 = 1",
             "0.5140437e-7*z5 = 1e-5*z1^2",
             "0.1006932e-6*z6 = 2e-5*z2^2",
             "0.7816278e-15*z7 = 1e-5*z4^2",
             "0.1496236e-6*z8 = 1e-5*z1*z3",
             "0.6194411e-7*z9 = 1e-5*z1*z2",
             "0.2089296e-14*z10 = 1e-10*z1*z2^2"]
    return parse_system("\n".join(lines))


# ---------------------------------------------------------------------------
# Sweeps

@dataclass
class SweepRow:
    value: object
    mean_residual: float
    stderr_residual: float
    mean_time: float
    n_ok: int
    n_failed: int


def _config_for(case, axis, value):
    cfg = case.config
    if axis == "gamma":
        return replace(cfg, gamma=float(value))
    if axis == "collocation":
        return replace(cfg, n_collocation=int(value))
    if axis == "architecture":
        layers, neurons = value
        return replace(cfg, hidden=(int(neurons),) * int(layers))
    raise ValueError(f"unknown sweep axis {axis!r}")


def sweep(case: BenchmarkCase, axis: str, values, trials: int = 1,
          anchor=None) -> List[SweepRow]:
    """Mean +- standard error of the final residual per swept value."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if anchor is None:
        anchor = case.reference["sweep_anchor"]
    rows = []
    for value in values:
        cfg = _config_for(case, axis, value)
        residuals, times = [], []
        n_failed = 0
        for trial in range(trials):
            trial_cfg = replace(cfg, seed=cfg.seed + trial)
            try:
                run = hann1(case.system, anchor, trial_cfg)
            except DomainError:  # inadmissible anchor: cell fails, sweep goes on
                n_failed += 1
                continue
            if run.status == "error" or not np.isfinite(run.residual):
                n_failed += 1
                continue
            residuals.append(run.residual)
            times.append(run.wall_time)
        if residuals:
            mean = float(np.mean(residuals))
            stderr = (float(np.std(residuals, ddof=1) / np.sqrt(len(residuals)))
                      if len(residuals) > 1 else 0.0)
            mean_time = float(np.mean(times))
        else:  # whole cell failed; recorded as missing, sweep continues
            mean = stderr = mean_time = float("nan")
        rows.append(SweepRow(value=value, mean_residual=mean,
                             stderr_residual=stderr, mean_time=mean_time,
                             n_ok=len(residuals), n_failed=n_failed))
    return rows


def sweep_to_csv(rows, path, axis):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([axis, "mean_residual", "stderr_residual",
                         "mean_time_s", "n_ok", "n_failed"])
        for r in rows:
            writer.writerow([r.value, repr(r.mean_residual),
                             repr(r.stderr_residual), repr(r.mean_time),
                             r.n_ok, r.n_failed])


# ---------------------------------------------------------------------------
# Reference comparison

def compare_reference(case: BenchmarkCase, results: SolutionSet):
    """Pair each cluster with its nearest reference point, if any."""
    refs = []
    for method, sol, res in case.reference.get("competitors", ()):
        refs.append({"method": method, "point": list(sol),
                     "published_residual": list(np.atleast_1d(res))})
    for pt, res in case.reference.get("refined_points", ()):
        refs.append({"method": "refined", "point": list(pt),
                     "published_residual": [res]})
    for pt in case.reference.get("exact_roots", ()):
        refs.append({"method": "exact", "point": list(pt),
                     "published_residual": [0.0]})
    rows = []
    for c in results.clusters:
        best = None
        for ref in refs:
            d = float(np.max(np.abs(np.asarray(ref["point"])
                                    - c.representative)))
            if best is None or d < best[0]:
                best = (d, ref)
        row = {"cluster": [float(v) for v in c.representative],
               "residual": c.min_residual}
        if best is not None:
            row["nearest_reference"] = best[1]
            row["distance"] = best[0]
        rows.append(row)
    return {"case": case.name, "matched": rows, "n_references": len(refs)}


def emit_plot_data(case: BenchmarkCase, path, samples: int = 2000):
    """(x, f(x)) curve samples for single-variable cases."""
    if case.system.n_variables != 1:
        raise ValueError("curve data only available for 1-variable cases")
    lo, hi = case.system.domain[0]
    xs = np.linspace(lo, hi, samples + 2)[1:-1]  # stay inside open ends
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "f"])
        for x in xs:
            try:
                fx = float(case.system.eval_batch(np.array([[x]]))[0, 0])
            except DomainError:
                continue
            writer.writerow([repr(float(x)), repr(fx)])
