import csv
import json
import math
import subprocess
import sys

import pytest

from grovercut.cli import OUT_ENV, main, parse_theta
from grovercut.graph import named_graph


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--no-timestamp")
    assert code == 0
    return json.loads(out)


@pytest.mark.parametrize("text,value", [
    ("0.25pi", math.pi / 4), ("pi/4", math.pi / 4), ("0.5", 0.5), ("theta0", math.pi / 4),
    ("0.323*pi", 0.323 * math.pi),
])
def test_parse_theta(text, value):
    assert parse_theta(text, named_graph("k14"))[0] == pytest.approx(value)


def test_parse_theta_rejects_garbage():
    with pytest.raises(ValueError):
        parse_theta("banana", named_graph("k14"))


def test_solve_k13_opt(capsys):
    res = run_json(capsys, "solve", "--graph", "k13", "--theta", "opt", "--shots", "819200", "--noise", "none")
    assert res["counts"]["111"] / 819200 == pytest.approx(0.347, abs=2e-3)
    assert res["cut"] == 3 and res["schema"] == 1


def test_solve_k14_reduced_space(capsys):
    res = run_json(capsys, "solve", "--graph", "k14", "--theta", "0.25pi", "--shots", "200000",
                   "--topology", "t5")
    assert res["counts"]["1111"] / 200000 == pytest.approx(0.195, abs=3e-3)
    assert res["cx_count"] == 13


def test_solve_k2(capsys):
    res = run_json(capsys, "solve", "--graph", "k2", "--theta", "opt", "--shots", "64")
    assert res["cut"] == 1
    for key in ("graph", "method", "theta", "iterations", "counts", "success_probability",
                "best_coloring", "cut", "trace"):
        assert key in res


def test_solve_noisy_with_mitigation(capsys, tmp_path):
    res = run_json(capsys, "solve", "--graph", "k13", "--topology", "t5", "--noise", "preset-a",
                   "--shots", "20000", "--out", str(tmp_path))
    assert res["measured_success_probability"] < res["simulated_success_probability"]
    assert res["analysis"]["tv_mitigated"] <= res["analysis"]["tv_raw"]
    rows = list(csv.reader(open(tmp_path / "solve-k13-distribution.csv")))
    assert rows[0][-1] == "mitigated" and len(rows) - 1 == 2 ** 3


def test_outputs_are_reproducible(capsys, tmp_path):
    args = ["solve", "--graph", "k14", "--topology", "t5", "--noise", "preset-b", "--shots", "3000",
            "--seed", "9", "--no-timestamp", "--quiet"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("solve-k14.json", "solve-k14-distribution.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_timestamp_is_the_only_difference(capsys):
    base = ["solve", "--graph", "k13", "--shots", "100"]
    main(base)
    a = json.loads(capsys.readouterr().out)
    main(base)
    b = json.loads(capsys.readouterr().out)
    assert "timestamp" in a
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_env_var_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    assert main(["exact", "--graph", "k2", "--quiet"]) == 0
    assert (tmp_path / "exact-k2.json").exists() and (tmp_path / "exact-k2-trace.csv").exists()


@pytest.mark.parametrize("name,cut", [("k14", 4), ("k13", 3), ("k2", 1)])
def test_exact(capsys, name, cut):
    res = run_json(capsys, "exact", "--graph", name)
    assert res["cut"] == cut and res["found_max_cut"]
    assert all({"t", "coloring", "legal"} <= set(h) for h in res["trace"])
    if name == "k2":
        assert res["rounds"] <= 2


def test_exact_noisy_sampler(capsys):
    res = run_json(capsys, "exact", "--graph", "k2", "--noise", "preset-a")
    assert res["cut"] in (0, 1)


def test_analyze(capsys, tmp_path):
    res = run_json(capsys, "analyze", "--graph", "k13", "--topology", "t5", "--out", str(tmp_path))
    assert res["metrics"]["kq"] == 21
    assert res["theta_plan"]["theta_opt_over_pi"] == pytest.approx(0.392, abs=2e-3)
    rows = list(csv.reader(open(tmp_path / "analyze-k13-sweep.csv")))[1:]
    assert len(rows) == 256
    # zero phase is plain sampling: 2 optimal colorings out of 16
    assert float(rows[0][2]) == pytest.approx(2 / 16)


def test_analyze_k14_sweep_peak(capsys, tmp_path):
    run_json(capsys, "analyze", "--graph", "k14", "--out", str(tmp_path))
    rows = [list(map(float, r)) for r in list(csv.reader(open(tmp_path / "analyze-k14-sweep.csv")))[1:]]
    peak = max(rows, key=lambda r: r[2])
    assert peak[1] == pytest.approx(0.323, abs=0.005)


@pytest.mark.parametrize("name,cx", [("k13", 7), ("k14", 13)])
def test_export_cx_lines(capsys, name, cx):
    code, out, _ = run(capsys, "export", "--graph", name, "--topology", "t5")
    assert code == 0
    assert sum(line.startswith("cx ") for line in out.splitlines()) == cx
    assert out.startswith("OPENQASM 2.0;")


def test_export_to_file(capsys, tmp_path):
    f = tmp_path / "k13.qasm"
    code, out, _ = run(capsys, "export", "--graph", "k13", "--output", str(f))
    assert code == 0 and f.read_text().startswith("OPENQASM") and json.loads(out)["cx_count"] == 7


def test_calibrate(capsys, tmp_path):
    res = run_json(capsys, "calibrate", "--noise", "preset-a", "--qubits", "2", "--shots", "1000",
                   "--out", str(tmp_path))
    assert len(res["matrix"]) == 4
    assert (tmp_path / "calibrate-preset-a.json").exists()


@pytest.mark.parametrize("argv", [
    ["solve", "--graph", "petersen"],
    ["solve", "--graph", "k13", "--noise", "melbourne"],
    ["solve", "--graph", "k13", "--theta", "banana"],
    ["solve", "--graph", "path:7", "--noise", "preset-a"],
    ["export", "--graph", "k13", "--topology", "hexagon"],
])
def test_invalid_input_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "invalid" in err


def test_topology_failure_exit_code(capsys):
    code, _, err = run(capsys, "export", "--graph", "complete:4", "--virtual", "none", "--toffoli", "6cx",
                       "--topology", "t5")
    assert code == 3 and "violations" in err


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "grovercut.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "grovercut" in out.stdout
