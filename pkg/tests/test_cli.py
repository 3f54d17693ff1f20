import csv
import io
import json

import pytest

import qsv.cli as cli
from qsv.cli import ConfigError, main, parse_config_text


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_config_parsing():
    cfg = parse_config_text("# comment\nsuite = phase\n\norder=3  # trailing\ntiming = true\n")
    assert cfg == {"suite": "phase", "order": 3, "timing": True}
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")
    with pytest.raises(ConfigError):
        parse_config_text("colour = blue")
    with pytest.raises(ConfigError):
        parse_config_text("order = three")


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["convention"] == "ipd"
    assert {r["check_id"] for r in rep["results"]} == {"gate", "field_axioms", "limit_q_to_1", "numeric_q_0.9"}
    assert rep["summary"]["fail"] == 0


def test_gate_failure_exits_3(capsys, monkeypatch):
    monkeypatch.setattr(cli, "gate_check", lambda variant, nmax=4: False)
    code, _, err = run(capsys, "selftest")
    assert code == 3
    assert "gate" in err


def test_coefficient_table(capsys):
    code, out, _ = run(capsys, "coeffs", "--nmax", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 15
    assert all(r["agree"] == "True" for r in rows)
    code, out, _ = run(capsys, "coeffs", "--nmax", "0", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0 and len(rows) == 1 and rows[0]["closed"] == "(1*q^0)/(1*q^0)"


def test_coefficients_bad_bound(capsys):
    code, _, err = run(capsys, "coeffs", "--nmax", "13")
    assert code == 2 and "nmax" in err


def test_wrong_convention_fails(capsys):
    code, out, _ = run(capsys, "coeffs", "--convention", "npd", "--format", "json")
    assert code == 1
    assert any(not r["agree"] for r in json.loads(out)["rows"])
    code, _, _ = run(capsys, "coeffs", "--convention", "zzz")
    assert code == 2


def test_numeric_rendering(capsys):
    code, out, _ = run(capsys, "coeffs", "--nmax", "1", "--q", "9/10", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    # (C_q)_0^1 = -(q + 1/q) at q = 9/10
    assert rows[1]["closed"] == "-181/90"
    code, _, _ = run(capsys, "coeffs", "--q", "1", "--nmax", "2")
    assert code == 0


def test_unknown_suite_and_space(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2
    assert run(capsys, "verify", "--suite", "phase", "--space", "plane")[0] == 2


def test_verify_phase_json_is_byte_stable(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "--suite", "phase", "--format", "json", "--out", str(a)]) == 0
    assert main(["verify", "--suite", "phase", "--format", "json", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["schema"] == 1
    assert rep["summary"] == {"pass": 8, "fail": 0, "unsupported": 0}
    keys = {"check_id", "space", "geometry", "window", "status", "witness"}
    assert all(keys <= set(r) for r in rep["results"])
    assert all("seconds" not in r for r in rep["results"])


def test_timing_flag_adds_seconds(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "phase", "--space", "line", "--format", "csv", "--timing")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4 and all(float(r["seconds"]) >= 0 for r in rows)


def test_config_file_and_environment(capsys, tmp_path, monkeypatch):
    conf = tmp_path / "run.conf"
    conf.write_text("suite = continuity\nspace = euclid3\nformat = json\n")
    code, out, _ = run(capsys, "verify", "--config", str(conf))
    rep = json.loads(out)
    assert code == 0 and rep["suite"] == "continuity"
    assert rep["results"][0]["status"] == "unsupported"
    monkeypatch.setenv("QSV_CONFIG", str(conf))
    code, out, _ = run(capsys, "verify", "--format", "csv")
    assert code == 0 and out.startswith("check_id,")
    monkeypatch.setenv("QSV_CONFIG", str(tmp_path / "missing.conf"))
    assert run(capsys, "verify")[0] == 2


def test_failing_suite_exits_1(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "continuity", "--space", "line", "--order", "4",
                       "--time-order", "2", "--format", "json")
    rep = json.loads(out)
    assert code == 1
    assert rep["summary"]["fail"] == 4
    assert all(r["witness"] for r in rep["results"])


def test_wirparham_values_in_report(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "ehrenfest", "--space", "line", "--order", "3",
                       "--format", "json", "--q", "2")
    rep = json.loads(out)
    assert code == 0
    vals = {r["geometry"]: r["value"] for r in rep["results"] if r["check_id"] == "wirparham"}
    assert vals == {"unhatted/left": "3", "unhatted/right": "-3", "hatted/left": "3/2", "hatted/right": "-3/2"}


def test_each_space_runs_at_its_own_order(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "phase", "--format", "json")
    windows = {(r["space"], r["window"]) for r in json.loads(out)["results"]}
    assert code == 0
    assert windows == {("line", "K=8"), ("euclid3", "K=5")}
    code, out, _ = run(capsys, "verify", "--suite", "ehrenfest", "--format", "json")
    rows = json.loads(out)["results"]
    wir = [(r["space"], r["geometry"]) for r in rows if r["check_id"] == "wirparham"]
    assert code == 0 and len(wir) == len(set(wir)) == 8
    assert {r["window"] for r in rows if r["space"] == "line" and r["check_id"] == "force"} == {"N=6"}
