import io
import json
from pathlib import Path

import pytest

from approxdiag.cli import main
from approxdiag.report import strip_timings

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
E1 = str(CONFIGS / "e1.json")
D1 = str(CONFIGS / "d1.json")
ND1 = str(CONFIGS / "nd1.json")
FAULT_X1 = str(CONFIGS / "fault_x1.json")
FAULT_X2 = str(CONFIGS / "fault_x2.json")


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out.strip()
    return code, json.loads(out) if out else None


def test_validate(capsys):
    code, doc = run_json(capsys, ["validate", E1, "--samples", "1500", "--seed", "3", "--json"])
    assert code == 0
    assert doc["verdict"]["verdict"] == "PASS"
    assert doc["schema"] == "approxdiag/report/v1"


def test_reports_reproducible_modulo_timings(capsys):
    _, a = run_json(capsys, ["validate", E1, "--samples", "500", "--json"])
    _, b = run_json(capsys, ["validate", E1, "--samples", "500", "--json"])
    assert strip_timings(a) == strip_timings(b)


def test_abstract_writes_stable_model(tmp_path, capsys):
    out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
    code, doc = run_json(
        capsys,
        ["abstract", E1, "--eta", "0.5", "--mu", "0.5", "--solve-epsilon", "-o", str(out1), "--json"],
    )
    assert code == 0
    assert doc["counts"]["initial"] == 9  # quantizer image of the initial box
    code2, _ = run_json(
        capsys,
        [
            "abstract", E1, "--eta", "0.5", "--mu", "0.5", "--solve-epsilon",
            "-o", str(out2), "--threads", "3", "--json",
        ],
    )
    assert code2 == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_abstract_requires_epsilon_choice(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["abstract", E1, "--eta", "0.5", "--mu", "0.5", "-o", "/tmp/x.json"])
    assert exc.value.code == 64


def test_check_fts_fixture(capsys):
    code, doc = run_json(capsys, ["check-fts", D1, "--faults", "1", "--rho", "0", "--json"])
    assert code == 0
    assert doc["verdict"]["diagnosable"] is True
    assert doc["verdict"]["delta"] == 1


def test_check_fts_brute_force(capsys):
    code, doc = run_json(
        capsys, ["check-fts", ND1, "--faults", "1", "--rho", "1", "--brute-force", "6", "--json"]
    )
    assert code == 0
    assert doc["verdict"]["diagnosable"] is False
    assert len(doc["verdict"]["witness"][0]) >= 4


def test_check_fts_region_faults(tmp_path, capsys):
    region = tmp_path / "region.json"
    region.write_text(json.dumps({"boxes": [{"lower": [2], "upper": [2]}]}))
    code, doc = run_json(
        capsys, ["check-fts", D1, "--faults", str(region), "--rho", "0", "--json"]
    )
    assert code == 0
    assert doc["parameters"]["faults"] == [1]  # the state embedded at 2


def test_monitor_session(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("[0]\n[2]\n[2]\n"))
    code = main(["monitor", D1, "--faults", "1", "--rho", "0"])
    assert code == 0
    assert capsys.readouterr().out.split() == ["0", "1", "1"]


def test_monitor_infeasible_exit_code(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("[0]\n[1]\n"))
    code = main(["monitor", D1, "--faults", "1", "--rho", "0"])
    assert code == 3


def test_check_prove(capsys):
    code, doc = run_json(
        capsys,
        [
            "check", E1, "--faults", FAULT_X1, "--mode", "prove",
            "--eta", "0.05", "--mu", "0.025", "--epsilon", "0.5", "--json",
        ],
    )
    assert code == 0
    assert doc["verdict"]["direction"] == "DIAGNOSABLE_FOR_RHO_ABOVE"
    assert doc["verdict"]["rho_bound"] == 2.0


def test_check_refute_inconclusive_exit_code(tmp_path, capsys):
    region = tmp_path / "visible.json"
    region.write_text(json.dumps({"boxes": [{"lower": [1.4, -1.2], "upper": [2.1, 1.2]}]}))
    code, doc = run_json(
        capsys,
        [
            "check", E1, "--faults", str(region), "--mode", "refute", "--rho", "0.05",
            "--eta", "0.03", "--mu", "0.01", "--epsilon", "0.3", "--json",
        ],
    )
    assert code == 2
    assert doc["verdict"]["direction"] == "INCONCLUSIVE"


def test_check_precondition_failure_exit_code(capsys):
    code = main(
        [
            "check", E1, "--faults", FAULT_X1, "--mode", "refute", "--rho", "0.05",
            "--eta", "0.03", "--mu", "0.01", "--epsilon", "0.3", "--json",
        ]
    )
    assert code == 4  # erosion of the thin box is empty


def test_check_refine_recovers_from_coarse_start(capsys):
    # eta = 0.06 erodes the fault region away; one halving settles it.
    code, doc = run_json(
        capsys,
        [
            "check", E1, "--faults", FAULT_X2, "--mode", "refute", "--rho", "0.05",
            "--eta", "0.06", "--mu", "0.02", "--solve-epsilon", "--refine", "2", "--json",
        ],
    )
    assert code == 0
    assert doc["verdict"]["direction"] == "NOT_DIAGNOSABLE_FOR_RHO"
    assert doc["parameters"]["refinements"] == 1


def test_falsify(capsys):
    code, doc = run_json(
        capsys,
        [
            "falsify", E1, "--faults", FAULT_X2, "--rho", "0.05",
            "--trials", "400", "--horizon", "30", "--seed", "0", "--json",
        ],
    )
    assert code == 0
    assert doc["verdict"]["found"] is True
    assert doc["verdict"]["counterexample"]["fault_time"] >= 1


def test_bench_counts(capsys):
    code, doc = run_json(capsys, ["bench", "--dims", "1,2,3", "--width", "4", "--json"])
    assert code == 0
    assert [row["states"] for row in doc["rows"]] == [4, 16, 64]


def test_bench_empty_dims(capsys):
    code, doc = run_json(capsys, ["bench", "--json"])
    assert code == 0
    assert doc["rows"] == []


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["abstract", "--definitely-not-a-flag"])
    assert exc.value.code == 64


def test_missing_config_is_precondition_failure(capsys):
    assert main(["validate", "/nonexistent/config.json"]) == 4
