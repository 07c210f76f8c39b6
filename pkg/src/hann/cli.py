"""Command-line entry point: solve DSL systems, run benchmarks and sweeps,
refine points, solve time-varying systems, and export reports."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (BENCHMARK_NAMES, builtin, compare_reference,
                    emit_plot_data, sweep, sweep_to_csv)
from .expr import DomainError, ParseError, parse_system, residual_l1
from .homotopy import build_homotopy, theorem1_diagnostic
from .net import forward_batch
from .sampling import SamplePlan, latin_hypercube, midpoint_grid, random_in_cell
from .solver import hann1, hann2, multistart, newton_refine
from .timevarying import TimeVaryingProblem, solve_time_varying
from .train import OptimizerConfig, TrainConfig

_DEFAULT_SEED = 1234


def _resolve_seed(flag_value):
    """--seed flag, then the HANN_SEED environment variable, then 1234."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("HANN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"error: HANN_SEED={env!r} is not an integer")
    return _DEFAULT_SEED


def _parse_vector(text):
    try:
        return np.array([float(v) for v in text.replace(",", " ").split()])
    except ValueError:
        raise SystemExit(f"error: cannot parse vector {text!r}")


def _parse_hidden(args):
    if args.hidden:
        try:
            return tuple(int(v) for v in args.hidden.split(","))
        except ValueError:
            raise SystemExit(f"error: bad --hidden value {args.hidden!r}")
    return (args.neurons,) * args.layers


def _train_config(args, seed):
    opt = OptimizerConfig(kind=args.optimizer, max_iters=args.max_iters)
    cfg = TrainConfig(gamma=args.gamma, n_collocation=args.points,
                      hidden=_parse_hidden(args), seed=seed, optimizer=opt)
    if cfg.gamma <= 0:
        raise SystemExit("error: --gamma must be positive")
    if cfg.n_collocation < 1:
        raise SystemExit("error: --points must be >= 1")
    return cfg


def _add_train_flags(p):
    p.add_argument("--gamma", type=float, default=0.01,
                   help="homotopy regularization constant (default 0.01)")
    p.add_argument("--points", type=int, default=1000, metavar="N_F",
                   help="number of collocation points (default 1000)")
    p.add_argument("--layers", type=int, default=4,
                   help="hidden layer count (default 4)")
    p.add_argument("--neurons", type=int, default=40,
                   help="neurons per hidden layer (default 40)")
    p.add_argument("--hidden", default=None, metavar="N1,N2,...",
                   help="explicit hidden widths, overrides --layers/--neurons")
    p.add_argument("--optimizer", choices=("lbfgs", "adam"), default="lbfgs")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: HANN_SEED env var, then 1234)")


def _add_output_flags(p):
    p.add_argument("--out", default=None, metavar="DIR",
                   help="directory for report artifacts (default: no files)")
    p.add_argument("--prefix", default="run",
                   help="artifact filename prefix (default 'run')")


def _load_system(path):
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise SystemExit(f"error: cannot read {path}: {err}")
    try:
        return parse_system(text)
    except ParseError as err:
        raise SystemExit(f"error: {path}: {err}")


def _config_echo(args, seed, extra=None):
    skip = {"func", "out", "prefix", "seed"}
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    echo["seed"] = seed
    if extra:
        echo.update(extra)
    return echo


def _write_artifacts(out_dir, prefix, config_echo, solution_set):
    """JSONL raw runs + deterministic summary JSON + CSV; timing separate."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solution_set.to_jsonl(out / f"{prefix}.jsonl")
    solution_set.to_csv(out / f"{prefix}.csv")
    summary = {"version": __version__, "config": config_echo}
    summary.update(solution_set.summary())
    with open(out / f"{prefix}.summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    timing = {"total_wall_time": sum(r.wall_time
                                     for r in solution_set.results),
              "per_run": [r.wall_time for r in solution_set.results]}
    with open(out / f"{prefix}.timing.json", "w") as fh:
        json.dump(timing, fh, indent=2)
        fh.write("\n")
    return summary


def _print_summary(solution_set):
    s = solution_set.summary()
    print(f"runs: {s['n_runs']}  failed: {s['n_failed']}  "
          f"clusters: {len(s['clusters'])}")
    for c in s["clusters"]:
        pt = ", ".join(f"{v:.6g}" for v in c["representative"])
        print(f"  ({pt})  residual {c['min_residual']:.6e}  "
              f"size {c['size']}")


def _initials_from_args(args, sys_, seed):
    if args.x0:
        return [_parse_vector(v) for v in args.x0]
    dom = sys_.domain
    m = args.subintervals
    if args.scheme == "midpoint-grid":
        return midpoint_grid(dom, [m] * len(dom))
    if args.scheme == "random-in-cell":
        return random_in_cell(dom, [m] * len(dom), seed)
    if args.scheme == "lhs":
        plan = SamplePlan(count=args.count, dims=len(dom),
                          bounds=tuple(dom), seed=seed)
        return latin_hypercube(plan)
    raise SystemExit(f"error: unknown scheme {args.scheme!r}")


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_solve(args):
    seed = _resolve_seed(args.seed)
    sys_ = _load_system(args.file)
    cfg = _train_config(args, seed)
    initials = _initials_from_args(args, sys_, seed)
    result = multistart(sys_, initials, cfg, algo=args.algo.split("+")[0],
                        n_max=args.Nm, threshold=args.threshold,
                        jobs=args.jobs)
    if args.algo.endswith("+refine"):
        for c in result.clusters:
            refined = newton_refine(sys_, c.representative)
            c.representative = refined.x_final
            c.min_residual = refined.residual
    _print_summary(result)
    if args.out:
        _write_artifacts(args.out, args.prefix,
                         _config_echo(args, seed, {"file": args.file}),
                         result)
    return 0


def _cmd_bench(args):
    if args.list or args.name is None:
        if args.name is None and not args.list:
            raise SystemExit("error: give a benchmark name or --list")
        for n in BENCHMARK_NAMES:
            print(n)
        return 0
    try:
        case = builtin(args.name)
    except ValueError as err:
        raise SystemExit(f"error: {err}")
    seed = _resolve_seed(args.seed)
    cfg = replace(case.config, seed=seed)
    threshold = args.threshold or case.dedup_threshold

    if case.name == "time-varying":
        return _run_time_varying_case(case, cfg, args)

    if args.emit_plot_data:
        emit_plot_data(case, args.emit_plot_data)

    if case.name == "combustion10":
        # each published row carries its own seed and constant initial value
        from .bench import COMBUSTION_ROWS
        results = []
        for row_seed, init, _ in COMBUSTION_ROWS:
            row_cfg = replace(cfg, seed=row_seed)
            x0 = np.full(case.system.n_variables, init)
            results.append(hann1(case.system, x0, row_cfg))
        from .solver import SolutionSet, dedup
        good = [r for r in results if r.status != "error"]
        clusters = dedup([r.x_final for r in good], threshold,
                         [r.residual for r in good])
        result = SolutionSet(results=results, clusters=clusters,
                             threshold=threshold)
    else:
        initials = case.initial_values(subdivisions=args.subintervals,
                                       seed=seed)
        result = multistart(case.system, initials, cfg,
                            algo=args.algo.split("+")[0], n_max=args.Nm,
                            threshold=threshold, jobs=args.jobs)
        if args.algo.endswith("+refine"):
            for c in result.clusters:
                refined = newton_refine(case.system, c.representative)
                c.representative = refined.x_final
                c.min_residual = refined.residual
    _print_summary(result)
    if args.compare:
        report = compare_reference(case, result)
        print(json.dumps(report, indent=2))
    if args.out:
        _write_artifacts(args.out, args.prefix,
                         _config_echo(args, seed, {"benchmark": case.name}),
                         result)
    return 0


def _run_time_varying_case(case, cfg, args):
    problem = case.time_problem
    traj = solve_time_varying(problem, cfg, grid_points=args.grid,
                              exact=case.reference.get("exact"),
                              anchor_hint=case.reference.get("anchor_hint"))
    worst = float(np.max(traj.residuals))
    print(f"status: {traj.status}  grid: {len(traj.ts)}  "
          f"max residual: {worst:.6e}")
    if traj.errors is not None:
        for j in range(traj.errors.shape[1]):
            print(f"  max |error| x_{j+1}: {float(traj.errors[:, j].max()):.6e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        traj.to_csv(out / f"{args.prefix}.trajectory.csv",
                    case.system.variables)
    return 0


def _cmd_sweep(args):
    try:
        case = builtin(args.name)
    except ValueError as err:
        raise SystemExit(f"error: {err}")
    seed = _resolve_seed(args.seed)
    case.config = replace(case.config, seed=seed)
    if args.axis == "gamma":
        values = [float(v) for v in args.values]
    elif args.axis == "collocation":
        values = [int(v) for v in args.values]
    else:
        values = []
        for v in args.values:  # architecture cells look like "4x40"
            try:
                layers, neurons = v.lower().split("x")
                values.append((int(layers), int(neurons)))
            except ValueError:
                raise SystemExit(f"error: bad architecture value {v!r}; "
                                 "use LAYERSxNEURONS, e.g. 4x40")
    rows = sweep(case, args.axis, values, trials=args.trials)
    for r in rows:
        print(f"{r.value}: residual {r.mean_residual:.6e} "
              f"+- {r.stderr_residual:.2e}  time {r.mean_time:.2f}s  "
              f"ok {r.n_ok}  failed {r.n_failed}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        sweep_to_csv(rows, args.out, args.axis)
    return 0


def _cmd_refine(args):
    sys_ = _load_system(args.file)
    x0 = _parse_vector(args.x0)
    if x0.size != sys_.n_variables:
        raise SystemExit(f"error: point has {x0.size} coordinates, system "
                         f"has {sys_.n_variables} variables")
    result = newton_refine(sys_, x0, max_iters=args.max_iters, tol=args.tol)
    pt = ", ".join(f"{v!r}" for v in result.x_final)
    print(f"status: {result.status}  iterations: {result.n_iters}")
    print(f"x: ({pt})")
    print(f"residual: {result.residual:.6e}")
    return 0


def _cmd_time_varying(args):
    seed = _resolve_seed(args.seed)
    if args.file:
        sys_ = _load_system(args.file)
        if sys_.time_var is None:
            raise SystemExit("error: system has no 'time:' line")
        problem = TimeVaryingProblem(system=sys_,
                                     t_domain=(args.t_start, args.t_end))
        hint = _parse_vector(args.hint) if args.hint else None
        cfg = _train_config(args, seed)
        traj = solve_time_varying(problem, cfg, grid_points=args.grid,
                                  anchor_hint=hint)
        print(f"status: {traj.status}  max residual: "
              f"{float(np.max(traj.residuals)):.6e}")
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            traj.to_csv(out / f"{args.prefix}.trajectory.csv",
                        sys_.variables)
        return 0
    case = builtin("time-varying")
    cfg = replace(case.config, seed=seed)
    return _run_time_varying_case(case, cfg, args)


def _cmd_diag(args):
    """Path-conditioning diagnostic along t for a trained or raw anchor."""
    sys_ = _load_system(args.file)
    x0 = _parse_vector(args.x0)
    try:
        hp = build_homotopy(sys_, x0, args.gamma)
    except (DomainError, ValueError) as err:
        raise SystemExit(f"error: {err}")
    ts = np.linspace(0.0, 1.0, args.steps)
    print("t,condition,residual")
    for t in ts:
        try:
            dxh, dth, cond = theorem1_diagnostic(hp, x0, t)
            r = residual_l1(sys_, x0)
        except DomainError as err:
            print(f"{t:.4f},error,{err}")
            continue
        print(f"{t:.4f},{cond:.6e},{r:.6e}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="hann",
        description="Homotopy-trained neural network solver for nonlinear "
                    "algebraic systems F(x) = 0.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a system from a DSL file")
    ps.add_argument("--file", required=True, help="system description file")
    ps.add_argument("--algo", choices=("hann1", "hann2", "hann1+refine"),
                    default="hann1")
    ps.add_argument("--Nm", type=int, default=10,
                    help="max outer iterations for hann2 (default 10)")
    ps.add_argument("--x0", action="append", default=None, metavar="V1,V2",
                    help="explicit anchor (repeatable)")
    ps.add_argument("--scheme",
                    choices=("midpoint-grid", "random-in-cell", "lhs"),
                    default="midpoint-grid")
    ps.add_argument("--subintervals", type=int, default=4,
                    help="grid subdivisions per dimension (default 4)")
    ps.add_argument("--count", type=int, default=50,
                    help="anchor count for the lhs scheme (default 50)")
    ps.add_argument("--threshold", type=float, default=1e-2,
                    help="dedup distance threshold (default 1e-2)")
    ps.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="multistart worker pool size")
    _add_train_flags(ps)
    _add_output_flags(ps)
    ps.set_defaults(func=_cmd_solve)

    pb = sub.add_parser("bench", help="run a built-in benchmark")
    pb.add_argument("name", nargs="?", choices=BENCHMARK_NAMES)
    pb.add_argument("--list", action="store_true",
                    help="list benchmark names and exit")
    pb.add_argument("--algo", choices=("hann1", "hann2", "hann1+refine"),
                    default="hann1")
    pb.add_argument("--Nm", type=int, default=10)
    pb.add_argument("--subintervals", type=int, default=None,
                    help="override the case's grid subdivisions")
    pb.add_argument("--threshold", type=float, default=None,
                    help="override the case's dedup threshold")
    pb.add_argument("--seed", type=int, default=None)
    pb.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    pb.add_argument("--grid", type=int, default=1001,
                    help="evaluation grid size (time-varying case)")
    pb.add_argument("--compare", action="store_true",
                    help="print the reference-comparison report")
    pb.add_argument("--emit-plot-data", default=None, metavar="PATH",
                    help="write (x, f(x)) curve samples for 1-D cases")
    _add_output_flags(pb)
    pb.set_defaults(func=_cmd_bench)

    pw = sub.add_parser("sweep", help="parameter sweep on a benchmark")
    pw.add_argument("name", choices=BENCHMARK_NAMES)
    pw.add_argument("--axis", required=True,
                    choices=("gamma", "collocation", "architecture"))
    pw.add_argument("--values", required=True, nargs="+")
    pw.add_argument("--trials", type=int, default=1)
    pw.add_argument("--seed", type=int, default=None)
    pw.add_argument("--out", default=None, metavar="CSV")
    pw.set_defaults(func=_cmd_sweep)

    pr = sub.add_parser("refine", help="Newton-polish a point")
    pr.add_argument("--file", required=True)
    pr.add_argument("--x0", required=True, metavar="V1,V2")
    pr.add_argument("--tol", type=float, default=1e-12)
    pr.add_argument("--max-iters", type=int, default=50)
    pr.set_defaults(func=_cmd_refine)

    pt = sub.add_parser("time-varying",
                        help="train x(t) for a time-parameterized system")
    pt.add_argument("--file", default=None,
                    help="DSL file with a 'time:' line (default: built-in "
                         "benchmark)")
    pt.add_argument("--t-start", type=float, default=0.0)
    pt.add_argument("--t-end", type=float, default=10.0)
    pt.add_argument("--hint", default=None, metavar="V1,V2",
                    help="initial guess for the anchor solve at t-start")
    pt.add_argument("--grid", type=int, default=1001)
    _add_train_flags(pt)
    _add_output_flags(pt)
    pt.set_defaults(func=_cmd_time_varying)

    pd = sub.add_parser("diag",
                        help="path-conditioning diagnostic along t")
    pd.add_argument("--file", required=True)
    pd.add_argument("--x0", required=True, metavar="V1,V2")
    pd.add_argument("--gamma", type=float, default=0.01)
    pd.add_argument("--steps", type=int, default=11)
    pd.set_defaults(func=_cmd_diag)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
