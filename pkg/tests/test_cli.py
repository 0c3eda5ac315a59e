import json

import pytest

from mmptol.cli import main
from mmptol.planfile import fixture_path
from mmptol.report import Report

FIXTURE = str(fixture_path("four_setups"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_enumerate(capsys):
    code, out, _ = run(capsys, "analyze", FIXTURE, "--solver", "enumerate")
    assert code == 0
    assert "worst case: BOUNDED, value 0.055313 mm" in out


def test_influence_table_text(capsys):
    code, out, _ = run(capsys, "influence", FIXTURE)
    assert code == 0
    assert "34.64" in out and "20.00" in out
    line = next(ln for ln in out.splitlines() if "tz_6" in ln)
    assert line.split()[-1] == "1.00"
    # non-influential cells stay blank
    assert next(ln for ln in out.splitlines() if "tz_7" in ln).split()[-1] == "tz_7"


def test_synthesize_text(capsys):
    code, out, _ = run(capsys, "synthesize", FIXTURE)
    assert code == 0
    assert "set-up 3: location of 6 w.r.t. |3|4|5|" in out


def test_synthesize_split_mode(capsys):
    code, out, _ = run(capsys, "synthesize", FIXTURE, "--mode", "split", "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["metadata"]["mode"] == "split"
    assert [p["type"] for p in rep["proposals"]] == ["orientation", "location", "orientation"]


@pytest.mark.parametrize("command", ["verify", "size", "redundancy"])
def test_eq2_commands_conform(capsys, command):
    code, out, _ = run(capsys, command, FIXTURE)
    assert code == 0 and "COMPLETE" in out


def test_verify_after_deleting_spec(capsys, tmp_path):
    doc = json.loads(fixture_path("four_setups").read_text())
    doc["manufacturing_specs"].pop(0)
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", str(p))
    assert code == 1
    assert "INCOMPLETE" in out and "DIVERGENT" in out


def test_json_round_trip(capsys):
    code, out, _ = run(capsys, "size", FIXTURE, "--format", "json")
    assert code == 0
    rep = Report.from_json(out)
    assert rep.to_json() == out
    assert rep.sizing.alpha > 0


def test_json_infinite_values_round_trip(capsys, tmp_path):
    doc = json.loads(fixture_path("four_setups").read_text())
    doc["manufacturing_specs"].pop()
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", str(p), "--format", "json")
    assert code == 1
    d = json.loads(out)
    assert d["verification"]["value"] == "-inf"
    assert Report.from_json(out).verification.value == float("-inf")


def test_out_file_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["synthesize", FIXTURE, "--seed", "7", "--format", "json", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out == ""


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "frobnicate", FIXTURE)[0] == 2
    assert run(capsys, "analyze", FIXTURE, "--solver", "magic")[0] == 2
    code, _, err = run(capsys, "analyze", str(tmp_path / "missing.json"))
    assert code == 2 and "parse error" in err


def test_bad_reference_reports_surface(capsys, tmp_path):
    doc = json.loads(fixture_path("four_setups").read_text())
    doc["functional_gauge"]["toleranced"] = 9
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(doc, indent=1))
    code, _, err = run(capsys, "analyze", str(p))
    assert code == 2 and "surface 9" in err and "line" in err


def test_verify_without_specs_is_usage_error(capsys, tmp_path):
    doc = json.loads(fixture_path("four_setups").read_text())
    del doc["manufacturing_specs"]
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(capsys, "verify", str(p))
    assert code == 2 and "manufacturing_specs" in err


def test_enumerate_guard_is_reported(capsys):
    code, _, err = run(capsys, "verify", FIXTURE, "--solver", "enumerate")
    assert code == 2 and "guard" in err


def test_non_conform_analysis(capsys, tmp_path):
    doc = json.loads(fixture_path("four_setups").read_text())
    doc["functional_gauge"]["width"] = 0.05
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "analyze", str(p), "--solver", "enumerate")
    assert code == 1 and "value -" in out
