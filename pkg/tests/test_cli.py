import json
import subprocess
import sys
from pathlib import Path

import pytest

from tailrate import cli, norms
from tailrate.errors import InvariantViolation

SCEN = Path(__file__).resolve().parents[1] / "src" / "tailrate" / "scenarios"


def tr(*argv, cwd=None):
    return subprocess.run([sys.executable, "-m", "tailrate", *argv], capture_output=True, text=True, cwd=cwd)


def runs(proc):
    assert proc.returncode == 0, proc.stderr
    return {r["op"]: r for r in json.loads(proc.stdout)["runs"]}


def test_rate_example():
    out = runs(tr("rate", "--grid", "0:40:4001", "--f", "exp(−x)", "--h", "x", "--scale", "exp"))
    assert abs(out["classify_rate"]["critical"] - 1) <= 0.02
    assert out["classify_rate"]["scale"] == "Exponential"


def test_norm_tails_example():
    out = runs(tr("norm", "--grid", "0:100:10001", "--f", "1/(1+x)^2", "--h", "x",
                  "--weight", "poly:p=3", "--L", "0", "--tails"))
    assert out["asymptotic_constant"]["status"] == "Diverges"
    assert out["fixed_norm"]["value"] == pytest.approx(101.0)


def test_ends_example():
    out = runs(tr("ends", "--graph", str(SCEN / "path_graph.txt"), "--window", "3"))
    assert out["detect_graph_ends"]["value"] == 2


def test_tails_ladder_writes_csv(tmp_path):
    rep = tmp_path / "t.json"
    p = tr("tails", "--grid", "0:40:401", "--f", "exp(-x)", "--h", "x", "--weight", "exp:a=1",
           "--ladder", "0,10,20,30", "--out", str(rep))
    assert p.returncode == 0, p.stderr and p.stdout == ""
    run = json.loads(rep.read_text())["runs"][0]
    assert (tmp_path / run["csv"]).read_text().startswith("R,T,loc\n")


def test_reports_are_byte_identical(tmp_path):
    argv = ["rate", "--grid", "0:40:4001", "--f", "exp(-x)", "--h", "x", "--scale", "exp"]
    assert tr(*argv).stdout == tr(*argv).stdout
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    tr("run", str(SCEN / "strip.json"), "--out", str(a))
    tr("run", str(SCEN / "strip.json"), "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_strip_scenario_run(tmp_path):
    out = tmp_path / "strip.json"
    p = tr("run", str(SCEN / "strip.json"), "--out", str(out))
    assert p.returncode == 0, p.stderr
    ops = {r["op"]: r for r in json.loads(out.read_text())["runs"]}
    assert ops["aniso_asymptotic"]["status"] == "Diverging"


@pytest.mark.parametrize("argv, fragment", [
    (["norm", "--grid", "0:1:5", "--f", "x", "--h", "x", "--L", "abc"], "input-error"),
    (["norm", "--grid", "0:1:5", "--csv", "a.csv", "--h", "x"], "input-error"),
    (["norm", "--grid", "1:0:5:log", "--f", "x", "--h", "x"], "input-error"),
    (["norm", "--grid", "0:1:5", "--f", "x +", "--h", "x"], "input-error"),
    (["rate", "--grid", "0:1:5", "--f", "x", "--h", "x", "--scale", "cubic"], "input-error"),
    (["frobnicate"], "input-error"),
])
def test_input_errors_exit_1(argv, fragment):
    p = tr(*argv)
    assert p.returncode == 1
    line, = p.stderr.strip().splitlines()
    assert line.startswith(f"tailrate: {fragment}: ")


def test_invariant_violation_exits_2(monkeypatch, capsys):
    def broken(*a, **k):
        raise InvariantViolation("sharp minimiser has one-sided contact")

    monkeypatch.setattr(norms, "_sharp_report", broken)
    code = cli.main(["norm", "--grid", "0:1:5", "--f", "x", "--h", "x", "--weight", "poly:p=1"])
    assert code == 2
    assert capsys.readouterr().err.strip() == "tailrate: invariant-violation: sharp minimiser has one-sided contact"


def test_check_subcommands():
    out = runs(tr("check", "admissibility", "--weight", "poly:p=2"))
    assert out["check_admissibility"]["status"] == "ok"
    out = runs(tr("check", "young", "--young", "expm1"))
    assert "check_young" in out
    out = runs(tr("check", "schur", "--grid", "0:50:51", "--f", "x", "--h", "x", "--weight", "poly:p=1"))
    assert "schur_test" in out
    out = runs(tr("check", "volume", "--grid", "0:100:1001", "--h", "x", "--mu", "spacing"))
    assert out["fit_volume_growth"]["value"] == pytest.approx(1.0, abs=0.05)
