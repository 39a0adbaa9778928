import json
import math

import numpy as np
import pytest

from critwin.cli import main
from critwin import AldousWindow, RunConfig, make_stream, simulate_trace


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_chain_writes_artifacts_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        capsys,
        "simulate-chain",
        "--n", "500", "--x", "1.0", "--lambda", "0.5",
        "--seed", "3", "--replicates", "3",
        "--out", str(out),
    )
    assert code == 0
    payload = json.loads(stdout)
    assert set(payload["outputs"]) == {"trace_0000.csv", "trace_0001.csv", "trace_0002.csv"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n"] == 500
    assert manifest["config"]["k"] == 7
    # trace contents match the library run with the same stream
    cfg = RunConfig(n=500, x=1.0, window=AldousWindow(0.5), seed=3, replicates=3)
    trace = simulate_trace(cfg, rng=make_stream(3, 1, "chain"))
    lines = (out / "trace_0001.csv").read_text().splitlines()
    assert lines[0] == "h,Z,C"
    assert lines[1] == f"0,{trace.Z[0]},{trace.C[0]}"
    assert len(lines) == trace.Z.size + 1


def test_replay_reproduces_identical_digests(tmp_path, capsys):
    args = (
        "simulate-chain", "--n", "300", "--x", "1.0",
        "--seed", "11", "--replicates", "2",
    )
    code1, out1, _ = run_cli(capsys, *args, "--out", str(tmp_path / "a"))
    code2, out2, _ = run_cli(capsys, *args, "--out", str(tmp_path / "b"))
    assert code1 == code2 == 0
    assert json.loads(out1)["outputs"] == json.loads(out2)["outputs"]


def test_simulate_chain_threads_match_serial(tmp_path, capsys):
    base = ("simulate-chain", "--n", "300", "--x", "1.0", "--seed", "5",
            "--replicates", "4")
    _, out1, _ = run_cli(capsys, *base, "--threads", "1", "--out", str(tmp_path / "s"))
    _, out2, _ = run_cli(capsys, *base, "--threads", "3", "--out", str(tmp_path / "t"))
    assert json.loads(out1)["outputs"] == json.loads(out2)["outputs"]


def test_simulate_graph_outputs_consistent_series(tmp_path, capsys):
    out = tmp_path / "g"
    code, stdout, _ = run_cli(
        capsys,
        "simulate-graph",
        "--n", "60", "--x", "1.0", "--lambda", "1.0",
        "--seed", "2", "--replicates", "1",
        "--out", str(out),
    )
    assert code == 0
    trace = np.loadtxt(out / "trace_0000.csv", delimiter=",", skiprows=1, ndmin=2, dtype=np.int64)
    cousin = np.loadtxt(out / "cousin_0000.csv", delimiter=",", skiprows=1, ndmin=2, dtype=np.int64)
    z, c = trace[:, 1], trace[:, 2]
    assert np.array_equal(np.cumsum(z), c)
    # K column telescopes the csn column
    csn, K = cousin[:, 1], cousin[:, 2]
    assert K[0] == 0
    assert np.array_equal(K[1:], np.cumsum(csn)[:-1])
    assert c[-1] == csn.size


def test_simulate_graph_walk_flag(tmp_path, capsys):
    out = tmp_path / "w"
    code, stdout, _ = run_cli(
        capsys,
        "simulate-graph",
        "--n", "40", "--x", "1.0", "--seed", "8", "--replicates", "1",
        "--walk", "--out", str(out),
    )
    assert code == 0
    assert "walk_0000.csv" in json.loads(stdout)["outputs"]
    lines = (out / "walk_0000.csv").read_text().splitlines()
    assert lines[0] == "i,X"
    assert lines[1] == "0,0"
    assert len(lines) == 42  # header + X(0..n)
    # full exploration ends at -(number of components)
    assert int(lines[-1].split(",")[1]) < 0


def test_verify_out_writes_report_and_sweep(tmp_path, capsys):
    out = tmp_path / "v"
    code, stdout, _ = run_cli(
        capsys, "verify", "--suite", "moments", "--out", str(out)
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] is True
    assert "duration_s" not in report
    sweep_lines = (out / "sweep.csv").read_text().splitlines()
    assert sweep_lines[0] == "n,quantity,sup_value"
    assert len(sweep_lines) == 1 + 3 * 4  # three quantities, four n values
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"report.json", "sweep.csv"}


def test_config_file_with_cli_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 200\nx = 1.0\nseed = 9\nreplicates = 1\n")
    out = tmp_path / "o"
    code, stdout, _ = run_cli(
        capsys, "simulate-chain", "--config", str(cfg),
        "--replicates", "2", "--out", str(out),
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["replicates"] == 2
    assert manifest["config"]["seed"] == 9


def test_env_seed_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CW_SEED", "77")
    out = tmp_path / "o"
    code, _, _ = run_cli(
        capsys, "simulate-chain", "--n", "100", "--x", "1.0", "--out", str(out)
    )
    assert code == 0
    assert json.loads((out / "manifest.json").read_text())["config"]["seed"] == 77


def test_bad_config_exits_one(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "simulate-chain", "--n", "0", "--x", "1.0", "--out", str(tmp_path / "o")
    )
    assert code == 1
    assert "error" in err


def test_replicates_zero_exits_one(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys,
        "simulate-chain", "--n", "10", "--x", "1.0", "--replicates", "0",
        "--out", str(tmp_path / "o"),
    )
    assert code == 1


def test_unwritable_out_dir_exits_two(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a dir")
    code, _, err = run_cli(
        capsys,
        "simulate-chain", "--n", "10", "--x", "1.0",
        "--out", str(blocker / "sub"),
    )
    assert code == 2
    assert "i/o" in err.lower()


def test_continuum_deterministic_emits_closed_form(tmp_path, capsys):
    out = tmp_path / "d"
    code, _, _ = run_cli(
        capsys,
        "continuum", "--kind", "deterministic",
        "--x", "0.5", "--lambda", "0", "--dt", "0.5", "--t-max", "2",
        "--out", str(out),
    )
    assert code == 0
    rows = (out / "deterministic.csv").read_text().splitlines()
    assert rows[0] == "t,f,c,z,K"
    last = rows[-1].split(",")
    assert float(last[0]) == 2.0
    assert float(last[2]) == pytest.approx(0.761594, abs=1e-6)
    assert float(last[2]) == pytest.approx(math.tanh(1.0), abs=1e-12)


def test_continuum_sde_and_hitting(tmp_path, capsys):
    code, stdout, _ = run_cli(
        capsys,
        "continuum", "--kind", "sde", "--x", "1", "--dt", "0.001",
        "--t-max", "0.5", "--seed", "4", "--replicates", "2",
        "--out", str(tmp_path / "s"),
    )
    assert code == 0
    assert set(json.loads(stdout)["outputs"]) == {"sde_0000.csv", "sde_0001.csv"}
    code, stdout, _ = run_cli(
        capsys,
        "continuum", "--kind", "hitting", "--x", "1", "--dt", "0.001",
        "--t-max", "6", "--seed", "4", "--replicates", "3",
        "--out", str(tmp_path / "h"),
    )
    assert code == 0
    lines = (tmp_path / "h" / "hitting.csv").read_text().splitlines()
    assert lines[0] == "replicate,T,truncated"
    assert len(lines) == 4


def test_continuum_bad_dt_exits_one(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys,
        "continuum", "--kind", "sde", "--dt", "0", "--out", str(tmp_path / "o"),
    )
    assert code == 1


def test_continuum_unknown_kind_exits_one(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys,
        "continuum", "--kind", "warp", "--out", str(tmp_path / "o"),
    )
    assert code == 1


def test_verify_unknown_suite_exits_one(capsys):
    code, _, err = run_cli(capsys, "verify", "--suite", "bogus")
    assert code == 1
    assert "unknown suite" in err


def test_verify_identities_passes_with_json_stdout(capsys):
    code, stdout, _ = run_cli(capsys, "verify", "--suite", "identities", "--seed", "1")
    assert code == 0
    lines = [line for line in stdout.splitlines() if line.strip()]
    assert len(lines) == 1
    payload = json.loads(lines[0])
    assert payload["pass"] is True
    assert payload["suite"] == "identities"
    assert payload["tolerance"] == 0.0
