import csv
import io
import json
import subprocess
import sys

import pytest

from cycleq import cli, scenarios
from cycleq.scenarios import ADDER, ScenarioResult


@pytest.fixture
def adder_file(tmp_path):
    p = tmp_path / "adder.cyq"
    p.write_text(ADDER)
    return p


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_adder_single_shot(capsys, adder_file):
    code, out, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "1", "--seed", "7")
    assert code == 0
    report = json.loads(out)
    (pattern,) = report["histograms"]["schedule"]["counts"]
    assert pattern in {"000", "010", "110", "101"}
    assert report["diagnostics"] == []


def test_missing_circuit_names_path(capsys, tmp_path):
    missing = tmp_path / "missing.cyq"
    code, out, err = run_cli(capsys, "run", "--circuit", str(missing))
    assert code == 1
    assert str(missing) in err and out == ""


def test_parse_error_forwarded_with_line(capsys, tmp_path):
    p = tmp_path / "bad.cyq"
    p.write_text("qubits 1\nbadop 0\n")
    code, _, err = run_cli(capsys, "run", "--circuit", str(p))
    assert code == 1
    assert f"{p}:2:" in err and "unknown-opcode" in err


def test_teleport_both_engines(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "teleport", "--shots", "100000", "--seed", "42", "--engine", "both", "--format", "json")
    assert code == 0
    report = json.loads(out)
    for engine in ("schedule", "statevector"):
        h = report["histograms"][engine]
        assert sorted(h["counts"]) == ["00", "01", "10", "11"]
        assert all(abs(c - 25_000) < 700 for c in h["counts"].values())
        assert report["fidelity"][engine] == pytest.approx(1.0, abs=1e-10)
    assert report["gof"]["schedule_vs_statevector"]["verdict"] == "pass"
    assert set(report) == {"config", "histograms", "analytic", "gof", "assertions", "fidelity", "wall_time"}


def test_both_always_reports_two_sample(capsys, adder_file):
    _, out, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "2000", "--engine", "both")
    assert "schedule_vs_statevector" in json.loads(out)["gof"]


def test_seed_from_environment(capsys, adder_file, monkeypatch):
    monkeypatch.setenv("CYCLEQ_SEED", "123")
    _, env_out, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "500")
    assert json.loads(env_out)["config"]["seed"] == 123
    _, flag_out, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "500", "--seed", "123")
    assert flag_out == env_out
    _, other, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "500", "--seed", "5")
    assert json.loads(other)["config"]["seed"] == 5


def test_bad_env_seed(capsys, adder_file, monkeypatch):
    monkeypatch.setenv("CYCLEQ_SEED", "banana")
    code, _, err = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "5")
    assert code == 1 and "CYCLEQ_SEED" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["run"],
        ["run", "--scenario", "adder", "--circuit", "x.cyq"],
        ["run", "--scenario", "nope"],
        ["run", "--scenario", "adder", "--shots", "0"],
        ["run", "--scenario", "adder", "--parallel", "0"],
        ["run", "--scenario", "adder", "--seed", "-1"],
        ["run", "--scenario", "adder", "--engine", "quantum"],
        ["run", "--scenario", "adder", "--mode", "paper-literal"],
        ["run", "--scenario", "noncommuting"],
        ["run", "--scenario", "noncommuting", "--mode", "paper-literal", "--engine", "both"],
        ["run", "--scenario", "adder", "--engine", "statevector", "--trace", "t.jsonl"],
        ["run", "--scenario", "teleport", "--alpha", "1", "--beta", "1"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 1
    assert out == "" and err


def test_failed_assertion_exits_2(capsys, monkeypatch):
    def broken(**kw):
        res = ScenarioResult("adder", kw["engine"], kw["shots"], kw["seed"], {"000": kw["shots"]}, {"000": 1.0})
        res.check("deliberately broken", False)
        return res

    monkeypatch.setitem(scenarios.SCENARIOS, "adder", broken)
    code, out, _ = run_cli(capsys, "run", "--scenario", "adder", "--shots", "10")
    assert code == 2
    assert json.loads(out)["assertions"][0]["passed"] is False


def test_csv_rows(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "bell-psi1", "--shots", "1000", "--engine", "both", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["engine"] for r in rows} == {"schedule", "statevector"}
    assert {r["pattern"] for r in rows} == {"00", "11"}
    for engine in ("schedule", "statevector"):
        assert sum(int(r["count"]) for r in rows if r["engine"] == engine) == 1000


def test_text_format(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "adder", "--shots", "1000", "--format", "text")
    assert code == 0
    assert out.startswith("adder  engine=schedule shots=1000 seed=0")
    assert "PASS" in out and "FAIL" not in out


def test_noncommuting_scenario(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "noncommuting", "--mode", "paper-literal", "--shots", "20000")
    assert code == 0
    counts = json.loads(out)["histograms"]["schedule"]["counts"]
    assert set(counts) == {"00x", "11x", "null"}


def test_trace_file(capsys, tmp_path):
    circ = tmp_path / "h.cyq"
    circ.write_text("qubits 1\nh 0\nmeasure 0\n")
    trace = tmp_path / "t.jsonl"
    code, _, _ = run_cli(capsys, "run", "--circuit", str(circ), "--shots", "1", "--trace", str(trace))
    assert code == 0
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    assert [r["event"] for r in recs] == ["rebuild", "rebuild", "measure", "collapse"]
    assert [s["dwell"] for s in recs[1]["groups"][0]["segments"]] == pytest.approx([0.5, 0.5])


def test_unwritable_trace(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--scenario", "adder", "--shots", "5", "--trace", str(tmp_path / "no" / "t.jsonl"))
    assert code == 1 and "trace" in err


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "run", "--scenario", "adder", "--shots", "100", "-o", str(dest))
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["config"]["scenario"] == "adder"


def test_timing_is_opt_in(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "adder", "--shots", "100")
    assert json.loads(out)["wall_time"] is None
    _, out, _ = run_cli(capsys, "run", "--scenario", "adder", "--shots", "100", "--timing")
    assert json.loads(out)["wall_time"] >= 0


def test_report_independent_of_parallel(capsys, adder_file):
    outs = set()
    for k in ("1", "2", "7"):
        _, out, _ = run_cli(capsys, "run", "--circuit", str(adder_file), "--shots", "20000", "--engine", "both", "--ordering", "shuffled", "--parallel", k)
        outs.add(out)
    assert len(outs) == 1


def test_check_subcommand(capsys, tmp_path):
    p = tmp_path / "c.cyq"
    p.write_text("qubits 2\nH 0\nmeasure 0\nmeasure 0\n")
    code, out, _ = run_cli(capsys, "check", str(p), "--print")
    assert code == 0
    assert "remeasure" in out and "unused-qubit" in out
    assert out.endswith("qubits 2\nh 0\nmeasure 0\nmeasure 0\n")


def test_module_entry_point(adder_file):
    proc = subprocess.run(
        [sys.executable, "-m", "cycleq", "run", "--circuit", str(adder_file), "--shots", "10", "--seed", "1", "--format", "csv"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("engine,pattern,count,frequency\n")
