"""Command-line interface: flags, artifacts, determinism, error paths."""

import json

import numpy as np
import pytest

from hann.cli import build_parser, main

QUAD_SRC = "vars: x\nx^2 - 4 = 0\n"
TINY_FLAGS = ["--hidden", "4,4", "--points", "20", "--max-iters", "100"]


@pytest.fixture
def quad_file(tmp_path):
    p = tmp_path / "quad.txt"
    p.write_text(QUAD_SRC)
    return str(p)


def test_bench_list_prints_six_names(capsys):
    assert main(["bench", "--list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out == ["single-eq", "abs-system", "trig-system", "interval10",
                   "combustion10", "time-varying"]


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_solve_writes_artifacts(quad_file, tmp_path, capsys):
    out_dir = tmp_path / "report"
    rc = main(["solve", "--file", quad_file, "--x0", "1.5", "--x0", "-1.5",
               "--seed", "7", "--jobs", "1", "--out", str(out_dir),
               *TINY_FLAGS])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "clusters: 2" in stdout
    assert (out_dir / "run.jsonl").exists()
    assert (out_dir / "run.csv").exists()
    assert (out_dir / "run.timing.json").exists()
    summary = json.loads((out_dir / "run.summary.json").read_text())
    assert summary["config"]["seed"] == 7
    assert "version" in summary
    assert summary["n_runs"] == 2
    reps = [c["representative"][0] for c in summary["clusters"]]
    assert sorted(round(r, 1) for r in reps) == [-2.0, 2.0]


def test_summary_json_byte_identical_across_runs(quad_file, tmp_path):
    args = ["solve", "--file", quad_file, "--x0", "1.0", "--seed", "3",
            "--jobs", "1", *TINY_FLAGS]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "run.summary.json").read_bytes()
    b = (tmp_path / "b" / "run.summary.json").read_bytes()
    assert a == b


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--file", str(tmp_path / "nope.txt"), "--x0", "1.0"])
    assert exc.value.code != 0


def test_parse_error_reports_location(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("x + = 0\n")
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--file", str(bad), "--x0", "1.0"])
    assert "line 1" in str(exc.value)


def test_invalid_gamma_is_config_error(quad_file):
    with pytest.raises(SystemExit):
        main(["solve", "--file", quad_file, "--x0", "1.0", "--gamma", "-1"])


def test_bad_vector_is_config_error(quad_file):
    with pytest.raises(SystemExit):
        main(["solve", "--file", quad_file, "--x0", "abc"])


def test_seed_env_fallback(quad_file, tmp_path, monkeypatch):
    monkeypatch.setenv("HANN_SEED", "99")
    main(["solve", "--file", quad_file, "--x0", "1.0", "--jobs", "1",
          "--out", str(tmp_path / "r"), *TINY_FLAGS])
    summary = json.loads((tmp_path / "r" / "run.summary.json").read_text())
    assert summary["config"]["seed"] == 99


def test_seed_flag_beats_env(quad_file, tmp_path, monkeypatch):
    monkeypatch.setenv("HANN_SEED", "99")
    main(["solve", "--file", quad_file, "--x0", "1.0", "--seed", "5",
          "--jobs", "1", "--out", str(tmp_path / "r"), *TINY_FLAGS])
    summary = json.loads((tmp_path / "r" / "run.summary.json").read_text())
    assert summary["config"]["seed"] == 5


def test_bad_seed_env_is_error(quad_file, monkeypatch):
    monkeypatch.setenv("HANN_SEED", "not-a-number")
    with pytest.raises(SystemExit):
        main(["solve", "--file", quad_file, "--x0", "1.0", *TINY_FLAGS])


def test_failed_cells_still_exit_zero(tmp_path, capsys):
    # anchor at the 1/x pole fails; the run as a whole still completes
    f = tmp_path / "pole.txt"
    f.write_text("vars: x\ndomain: x in [-40, 0]\n1/x - sin(x) + 1 = 0\n")
    rc = main(["solve", "--file", str(f), "--x0", "0", "--x0", "-1.875",
               "--jobs", "1", *TINY_FLAGS])
    assert rc == 0
    assert "failed: 1" in capsys.readouterr().out


def test_refine_subcommand(quad_file, capsys):
    rc = main(["refine", "--file", quad_file, "--x0", "2.3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "status: converged" in out
    assert "2.0" in out


def test_refine_arity_mismatch(quad_file):
    with pytest.raises(SystemExit):
        main(["refine", "--file", quad_file, "--x0", "1.0,2.0"])


def test_time_varying_subcommand(tmp_path, capsys):
    f = tmp_path / "tv.txt"
    f.write_text("vars: x1\ntime: t\nx1 - 2 = 0\n")
    rc = main(["time-varying", "--file", str(f), "--t-start", "0",
               "--t-end", "1", "--hint", "1.5", "--grid", "11",
               "--out", str(tmp_path / "tv"), *TINY_FLAGS])
    assert rc == 0
    assert "status:" in capsys.readouterr().out
    traj = (tmp_path / "tv" / "run.trajectory.csv").read_text()
    assert traj.splitlines()[0] == "t,x1,residual_1"


def test_diag_subcommand(quad_file, capsys):
    rc = main(["diag", "--file", quad_file, "--x0", "1.0", "--steps", "3"])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,condition,residual"
    assert len(out) == 4


def test_diag_inadmissible_anchor(tmp_path):
    f = tmp_path / "pole.txt"
    f.write_text("vars: x\n1/x = 0\n")
    with pytest.raises(SystemExit):
        main(["diag", "--file", str(f), "--x0", "0"])


def test_sweep_subcommand(tmp_path, capsys, monkeypatch):
    # shrink the benchmark config so the sweep is fast
    import hann.cli as cli
    from hann.train import OptimizerConfig, TrainConfig
    real_builtin = cli.builtin

    def small_builtin(name):
        case = real_builtin(name)
        case.config = TrainConfig(
            gamma=0.01, n_collocation=20, hidden=(4, 4), seed=1234,
            optimizer=OptimizerConfig(max_iters=100))
        return case

    monkeypatch.setattr(cli, "builtin", small_builtin)
    out_csv = tmp_path / "sweep.csv"
    rc = main(["sweep", "single-eq", "--axis", "architecture",
               "--values", "2x4", "--trials", "1", "--out", str(out_csv)])
    assert rc == 0
    assert "(2, 4)" in capsys.readouterr().out
    assert out_csv.exists()


def test_sweep_bad_architecture_value():
    with pytest.raises(SystemExit):
        main(["sweep", "single-eq", "--axis", "architecture",
              "--values", "4by40"])


def test_parser_flag_inventory():
    parser = build_parser()
    args = parser.parse_args(["bench", "single-eq", "--subintervals", "8",
                              "--threshold", "0.05", "--algo", "hann2",
                              "--Nm", "3", "--jobs", "2"])
    assert args.name == "single-eq"
    assert args.subintervals == 8
    assert args.Nm == 3


def test_bench_unknown_name_rejected():
    with pytest.raises(SystemExit):
        main(["bench", "not-a-benchmark"])
