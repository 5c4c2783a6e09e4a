import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

import afree
from afree.cli import run

SCEN = Path(afree.__file__).parent / "scenarios"


def _run(*argv):
    buf = io.StringIO()
    code, report = run(list(argv), stdout=buf)
    return code, report, buf.getvalue()


def _strip_timing(report):
    report = dict(report)
    report.pop("timing", None)
    return report


def test_symbol_worked_example():
    code, report, text = _run("symbol", "--config", str(SCEN / "worked_example.config.json"))
    assert code == 0
    eq = report["result"]["equations"][0]
    assert sorted(map(tuple, eq["I_principal"])) == [(0, 2), (1, 0)]
    assert eq["beta"] == ["1", "1/2"]
    assert "|xi1|^1 + |xi2|^2 = 1" in text


def test_parse_round_trip(tmp_path):
    code, report, text = _run("parse", "--operator", str(SCEN / "worked_example.afree"))
    assert code == 0
    assert (report["result"]["d"], report["result"]["m"]) == (2, 1)
    again = tmp_path / "again.afree"
    again.write_text(text)
    _, report2, text2 = _run("parse", "--operator", str(again))
    assert text2 == text


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.afree"
    bad.write_text("D[1,0] u1 + D[1,0,0] u1 = 0")
    code, report, _ = _run("parse", "--operator", str(bad))
    assert code == 2 and "ParseError" in report["error"]


def test_infeasible_exit_code():
    code, report, text = _run("symbol", "--config", str(SCEN / "infeasible.config.json"))
    assert code == 3
    assert len(report["infeasible_system"]) == 3
    assert "<(3, 0), beta> = 1" in text


def test_wavecone_both_methods():
    code, report, _ = _run("wavecone", "--config", str(SCEN / "divergence.config.json"))
    assert code == 0
    point = report["result"]["points"][0]
    assert point["exact"]["dimension"] == 0 and point["sampled"]["dimension"] == 0
    code, report, _ = _run("wavecone", "--operator", str(SCEN / "sum_components.afree"), "--method", "exact")
    assert code == 0 and report["result"]["points"][0]["exact"]["dimension"] == 1
    assert "sampled" not in report["result"]["points"][0]


def test_check_afree_codes():
    code, report, _ = _run("check-afree", "--config", str(SCEN / "dipole.config.json"))
    assert code == 0 and report["result"]["passed"]
    code, report, _ = _run("check-afree", "--config", str(SCEN / "transport.config.json"))
    assert code == 4 and report["afree"]["residual"] > 1e-3


def test_check_singularity_codes(tmp_path):
    out = tmp_path / "cert.csv"
    code, report, _ = _run("check-singularity", "--config", str(SCEN / "dipole.config.json"), "--csv", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][0] == "epsilon" and len(rows) == 7
    code, report, _ = _run("check-singularity", "--config", str(SCEN / "line.config.json"))
    assert code == 5 and report["certificate"]["verdict"] == "fail"


def test_blowup_command(tmp_path):
    out = tmp_path / "blowup.csv"
    code, report, _ = _run("blowup", "--config", str(SCEN / "dipole.config.json"), "--csv", str(out))
    assert code == 0
    assert all(r["gap"] < 1e-8 for r in report["result"]["reports"])
    assert out.read_text().startswith("epsilon")


@pytest.mark.parametrize("config, code", [("dipole", 0), ("transport", 4), ("line", 5)])
def test_verify_exit_codes(config, code):
    got, report, _ = _run("verify", "--config", str(SCEN / f"{config}.config.json"))
    assert got == code
    assert report["exit_code"] == code


def test_missing_measure_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"operator": str(SCEN / "transport.afree"), "measure": "nope.json"}))
    code, report, _ = _run("verify", "--config", str(cfg))
    assert code == 2 and "nope.json" in report["error"]


@pytest.mark.parametrize("payload", [
    {"tolerances": {"residual": -1}},
    {"epsilons": {"count": 2}},
    {"certificate": {"p": 0.5}},
    {"bogus": 1},
])
def test_bad_config(tmp_path, payload):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"operator": str(SCEN / "transport.afree"), **payload}))
    code, _, _ = _run("symbol", "--config", str(cfg))
    assert code == 2


def test_report_file_is_sorted_json(tmp_path):
    out = tmp_path / "r.json"
    _run("verify", "--config", str(SCEN / "dipole.config.json"), "--out", str(out))
    text = out.read_text()
    data = json.loads(text)
    assert data["result"]["passed"] and data["version"] == afree.__version__
    assert json.dumps(data, indent=2, sort_keys=True) == text


def test_verify_is_deterministic():
    a = _run("verify", "--config", str(SCEN / "dipole.config.json"), "--seed", "7")[1]
    b = _run("verify", "--config", str(SCEN / "dipole.config.json"), "--seed", "7")[1]
    assert json.dumps(_strip_timing(a), sort_keys=True, default=str) == \
        json.dumps(_strip_timing(b), sort_keys=True, default=str)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "afree", "symbol", "--operator", str(SCEN / "transport.afree")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "beta = (1, 1)" in proc.stdout
