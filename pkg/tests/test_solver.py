"""Solve-driver tests: single runs, the best-of loop, clustering, Newton."""

import numpy as np
import pytest

import hann.solver as solver
from hann.expr import parse_system, residual_l1
from hann.solver import (SolveResult, dedup, hann1, hann2, multistart,
                         newton_refine)
from hann.train import OptimizerConfig, TrainConfig

LINEAR_SRC = "vars: x\nx = 0"
QUAD_SRC = "vars: x\nx^2 - 4 = 0"
ABS_SRC = "vars: x, y\nx^2 - y^2 = 0\n1 - |x - y| = 0"
SINGLE_SRC = "vars: x\ndomain: x in [-40, 0]\n1/x - sin(x) + 1 = 0"


def _tiny_cfg(seed=0, **kw):
    opt = OptimizerConfig(max_iters=kw.pop("max_iters", 400))
    return TrainConfig(gamma=0.01, n_collocation=kw.pop("n_collocation", 50),
                       hidden=kw.pop("hidden", (8, 8)), seed=seed,
                       optimizer=opt, **kw)


# ---------------------------------------------------------------------------
# hann1

def test_hann1_linear_system():
    sys = parse_system(LINEAR_SRC)
    res = hann1(sys, [0.3], _tiny_cfg(hidden=(16, 16), n_collocation=100,
                                      max_iters=1500))
    assert res.status != "error"
    assert abs(res.x_final[0]) < 1e-3
    assert res.residual == pytest.approx(residual_l1(sys, res.x_final))


def test_hann1_quadratic_tracks_nearest_root():
    sys = parse_system(QUAD_SRC)
    res = hann1(sys, [1.5], _tiny_cfg())
    assert abs(res.x_final[0] - 2.0) < 1e-2
    res = hann1(sys, [-1.5], _tiny_cfg())
    assert abs(res.x_final[0] + 2.0) < 1e-2


def test_hann1_determinism():
    sys = parse_system(QUAD_SRC)
    a = hann1(sys, [1.0], _tiny_cfg(seed=3))
    b = hann1(sys, [1.0], _tiny_cfg(seed=3))
    assert np.array_equal(a.x_final, b.x_final)
    assert a.residual == b.residual
    assert a.loss_history == b.loss_history


def test_hann1_inadmissible_anchor_raises():
    from hann.expr import DomainError
    sys = parse_system(SINGLE_SRC)
    with pytest.raises(DomainError):
        hann1(sys, [0.0], _tiny_cfg())


def test_hann1_rejects_non_square_and_time_systems():
    with pytest.raises(ValueError):
        hann1(parse_system("vars: x, y\nx + y = 0"), [0.0, 0.0], _tiny_cfg())
    with pytest.raises(ValueError):
        hann1(parse_system("vars: x\ntime: t\nx - t = 0"), [0.0], _tiny_cfg())


def test_hann1_residual_recomputed_at_final_point():
    sys = parse_system(ABS_SRC)
    res = hann1(sys, [0.0, 0.0], _tiny_cfg())
    assert res.residual == pytest.approx(residual_l1(sys, res.x_final),
                                         abs=1e-15)


# ---------------------------------------------------------------------------
# hann2 loop semantics (forced inner runs)

def _fake_result(x, r):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return SolveResult(x_final=x, residual=float(r), loss_history=[float(r)],
                       x0=x, seed=0, wall_time=0.0, status="converged",
                       n_iters=1)


def test_hann2_stall_counter_with_increasing_residuals(monkeypatch):
    sys = parse_system(LINEAR_SRC)
    calls = []

    def fake_hann1(s, anchor, cfg):
        calls.append(cfg.seed)
        return _fake_result([2.0], 5.0 + len(calls))

    monkeypatch.setattr(solver, "hann1", fake_hann1)
    res = hann2(sys, [1.0], n_max=100, cfg=_tiny_cfg(seed=10))
    # first run (residual 6 <= 1000) accepts; the next 11 strictly worse runs
    # trip the stall rule (counter must exceed 10)
    assert len(calls) == 12
    assert calls == list(range(10, 22))  # seed = base + iteration index
    assert res.x_final[0] == 2.0
    assert res.residual == pytest.approx(residual_l1(sys, [2.0]))


def test_hann2_ties_reset_the_stall_counter(monkeypatch):
    sys = parse_system(LINEAR_SRC)
    calls = []

    def fake_hann1(s, anchor, cfg):
        calls.append(cfg.seed)
        return _fake_result([2.0], 5.0)  # constant residual: always a tie

    monkeypatch.setattr(solver, "hann1", fake_hann1)
    hann2(sys, [1.0], n_max=7, cfg=_tiny_cfg(seed=0))
    # ties accept, so the loop only ends when num_t exceeds n_max
    assert len(calls) == 8


def test_hann2_accepted_solution_becomes_next_anchor(monkeypatch):
    sys = parse_system(LINEAR_SRC)
    anchors = []

    def fake_hann1(s, anchor, cfg):
        anchors.append(float(anchor[0]))
        return _fake_result([anchor[0] / 2.0], abs(anchor[0]) / 2.0)

    monkeypatch.setattr(solver, "hann1", fake_hann1)
    hann2(sys, [8.0], n_max=3, cfg=_tiny_cfg())
    assert anchors == [8.0, 4.0, 2.0, 1.0]


def test_hann2_inner_errors_absorbed(monkeypatch):
    sys = parse_system(LINEAR_SRC)

    def fake_hann1(s, anchor, cfg):
        r = _fake_result(anchor, np.inf)
        r.status = "error"
        return r

    monkeypatch.setattr(solver, "hann1", fake_hann1)
    res = hann2(sys, [3.0], n_max=5, cfg=_tiny_cfg())
    # nothing accepted: best point stays the initial anchor, residual is
    # recomputed there (the 1000.0 sentinel must never leak)
    assert res.x_final[0] == 3.0
    assert res.residual == pytest.approx(3.0)


def test_hann2_dominates_hann1_shared_seed():
    sys = parse_system(QUAD_SRC)
    cfg = _tiny_cfg(seed=11)
    r1 = hann1(sys, [1.0], cfg)
    r2 = hann2(sys, [1.0], n_max=2, cfg=cfg)
    assert r2.residual <= r1.residual


def test_hann2_nmax_validation():
    with pytest.raises(ValueError):
        hann2(parse_system(LINEAR_SRC), [1.0], n_max=0, cfg=_tiny_cfg())


# ---------------------------------------------------------------------------
# dedup

def test_dedup_example_two_clusters():
    clusters = dedup([[0.1], [0.11], [0.5]], threshold=0.05)
    assert len(clusters) == 2
    assert clusters[0].members == [0, 1]
    assert clusters[1].members == [2]


def test_dedup_tiny_threshold_keeps_all():
    pts = [[0.0], [1.0], [2.0]]
    clusters = dedup(pts, threshold=1e-6)
    assert len(clusters) == 3


def test_dedup_representative_has_min_residual():
    clusters = dedup([[0.10], [0.11]], threshold=0.05, residuals=[0.5, 0.1])
    assert len(clusters) == 1
    assert clusters[0].representative[0] == 0.11
    assert clusters[0].min_residual == 0.1


def test_dedup_uses_max_norm():
    # points differ by 0.04 in one coordinate only
    a, b = [0.0, 0.0], [0.04, 0.0]
    assert len(dedup([a, b], threshold=0.05)) == 1
    assert len(dedup([a, [0.04, 0.06]], threshold=0.05)) == 2


def test_dedup_is_a_partition():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, (40, 3))
    clusters = dedup(list(pts), threshold=0.3)
    members = sorted(m for c in clusters for m in c.members)
    assert members == list(range(40))


def test_dedup_threshold_validation():
    with pytest.raises(ValueError):
        dedup([[0.0]], threshold=0.0)


# ---------------------------------------------------------------------------
# newton refinement

def test_newton_exact_root_unchanged():
    sys = parse_system(LINEAR_SRC)
    res = newton_refine(sys, [0.0])
    assert res.n_iters == 0
    assert res.status == "converged"
    assert res.x_final[0] == 0.0


def test_newton_converges_quadratically():
    sys = parse_system(QUAD_SRC)
    res = newton_refine(sys, [2.5])
    assert res.status == "converged"
    assert abs(res.x_final[0] - 2.0) < 1e-10
    assert res.n_iters <= 8


def test_newton_never_worse_than_input():
    sys = parse_system(ABS_SRC)
    rng = np.random.default_rng(9)
    for _ in range(20):
        p = rng.uniform(-3, 3, 2)
        before = residual_l1(sys, p)
        res = newton_refine(sys, p, max_iters=10)
        assert res.residual <= before + 1e-15


def test_newton_near_abs_kink_does_not_diverge():
    sys = parse_system(ABS_SRC)
    before = residual_l1(sys, [0.49, -0.51])
    res = newton_refine(sys, [0.49, -0.51])
    assert res.residual <= before


def test_newton_singular_jacobian_is_error_status():
    # at x=0 the Jacobian 2x is singular and the point is not a root
    sys2 = parse_system("vars: x\nx^2 + 1 = 0")
    res = newton_refine(sys2, [0.0])
    assert res.status in ("error", "line-search-stop")
    assert res.residual == pytest.approx(1.0)


def test_newton_refines_stored_ten_dim_point():
    from hann.bench import INTERVAL10_REFINED, builtin
    case = builtin("interval10")
    pt, _ = INTERVAL10_REFINED[1]
    res = newton_refine(case.system, pt, max_iters=20, tol=1e-12)
    assert res.residual <= 1e-9
    assert res.n_iters <= 5


# ---------------------------------------------------------------------------
# multistart

def test_multistart_singleton():
    sys = parse_system(QUAD_SRC)
    out = multistart(sys, [[1.0]], _tiny_cfg(), threshold=1e-2)
    assert len(out.results) == 1
    assert len(out.clusters) == 1


def test_multistart_error_runs_recorded_not_clustered():
    sys = parse_system(SINGLE_SRC)
    out = multistart(sys, [[0.0], [-1.875]], _tiny_cfg(max_iters=200),
                     threshold=1e-2)
    assert len(out.results) == 2
    assert out.results[0].status == "error"
    assert not np.isfinite(out.results[0].residual)
    assert all(0 not in c.members for c in out.clusters)


def test_multistart_excludes_out_of_domain_points(monkeypatch):
    sys = parse_system("vars: x\ndomain: x in [-1, 1]\nx = 0")

    def fake(s, x0, cfg):
        # second anchor "converges" outside the domain box
        target = 5.0 if x0[0] > 0 else 0.0
        return _fake_result([target], residual_l1(s, [target]))

    monkeypatch.setattr(solver, "hann1", fake)
    out = multistart(sys, [[-0.5], [0.5]], _tiny_cfg(), threshold=1e-2)
    assert len(out.results) == 2  # raw record kept
    assert len(out.clusters) == 1
    assert out.clusters[0].representative[0] == 0.0


def test_multistart_results_in_input_order_and_jobs_invariant():
    sys = parse_system(QUAD_SRC)
    cfg = _tiny_cfg(n_collocation=20, max_iters=100, hidden=(4,))
    initials = [[-1.0], [0.5], [1.5]]
    seq = multistart(sys, initials, cfg, jobs=1, threshold=1e-2)
    par = multistart(sys, initials, cfg, jobs=2, threshold=1e-2)
    for r, x0 in zip(seq.results, initials):
        assert r.x0[0] == x0[0]
    for a, b in zip(seq.results, par.results):
        assert np.array_equal(a.x_final, b.x_final)
        assert a.residual == b.residual


def test_multistart_validation():
    sys = parse_system(QUAD_SRC)
    with pytest.raises(ValueError):
        multistart(sys, [], _tiny_cfg())
    with pytest.raises(ValueError):
        multistart(sys, [[1.0]], _tiny_cfg(), algo="bogus")


# ---------------------------------------------------------------------------
# serialization

def test_solution_set_exports(tmp_path):
    import json
    sys = parse_system(QUAD_SRC)
    out = multistart(sys, [[1.0], [-1.0]], _tiny_cfg(max_iters=100),
                     threshold=1e-2)
    jl = tmp_path / "runs.jsonl"
    out.to_jsonl(jl)
    lines = [json.loads(l) for l in jl.read_text().splitlines()]
    assert sum(1 for l in lines if l["kind"] == "run") == 2
    assert lines[-1]["kind"] == "summary"
    csvp = tmp_path / "runs.csv"
    out.to_csv(csvp)
    rows = csvp.read_text().strip().splitlines()
    assert rows[0] == "x0_0,x_0,residual,status"
    assert len(rows) == 3
