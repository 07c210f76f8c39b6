"""hann: homotopy-trained neural networks for nonlinear algebraic systems.

Solve F(x) = 0 by embedding it in a homotopy H(x, t) and training a small
feed-forward network x(t) to drive a physics-informed loss to zero; the
solution is read off at t = 1.
"""

__version__ = "1.0.0"

from .backend import BACKEND_NAME
from .bench import BENCHMARK_NAMES, BenchmarkCase, builtin, compare_reference, sweep
from .expr import (DomainError, ParseError, System, eval_system, jacobian,
                   parse_expr, parse_system, residual_l1, system_to_text)
from .homotopy import (HomotopyProblem, build_homotopy, eval_homotopy,
                       homotopy_coeff, theorem1_diagnostic)
from .net import NetworkParams, forward, forward_batch, init_xavier, load_params, save_params
from .sampling import SamplePlan, latin_hypercube, midpoint_grid, random_in_cell
from .solver import (Cluster, SolutionSet, SolveResult, dedup, hann1, hann2,
                     multistart, newton_refine)
from .timevarying import (TimeVaryingProblem, Trajectory, compute_anchors,
                          solve_time_varying)
from .train import OptimizerConfig, TrainConfig, TrainingHistory

__all__ = [
    "__version__", "BACKEND_NAME",
    "DomainError", "ParseError", "System", "parse_system", "parse_expr",
    "system_to_text", "eval_system", "residual_l1", "jacobian",
    "SamplePlan", "latin_hypercube", "midpoint_grid", "random_in_cell",
    "NetworkParams", "init_xavier", "forward", "forward_batch",
    "save_params", "load_params",
    "HomotopyProblem", "build_homotopy", "homotopy_coeff", "eval_homotopy",
    "theorem1_diagnostic",
    "OptimizerConfig", "TrainConfig", "TrainingHistory",
    "SolveResult", "Cluster", "SolutionSet", "hann1", "hann2", "multistart",
    "dedup", "newton_refine",
    "TimeVaryingProblem", "Trajectory", "compute_anchors",
    "solve_time_varying",
    "BenchmarkCase", "BENCHMARK_NAMES", "builtin", "sweep",
    "compare_reference",
]
