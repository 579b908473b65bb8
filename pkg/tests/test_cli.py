import csv
import io
import json
import math
import subprocess
import sys

import pytest

from c3msv.cli import CSV_VERSION_LINE, EXIT_NUMERICAL, EXIT_USAGE, main, parse_observable
from c3msv.analysis import ENGINE_SKEW_ENV, CriterionObservable


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0] == CSV_VERSION_LINE
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_state_csv(capsys):
    code, out, _ = run(capsys, "state", "--r1", "0.5", "--r2", "0.5")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["n", "l", "m", "re", "im", "prob"]
    assert float(rows[0]["re"]) == pytest.approx(0.793278182, abs=1e-9)
    assert (rows[1]["n"], rows[1]["l"], rows[1]["m"]) == ("0", "1", "1")
    assert len(rows) == 28 * 29 // 2


def test_squeeze_number_eigenstate(capsys):
    code, out, _ = run(capsys, "squeeze-number", "--r1", "0.5", "--r2", "0.5", "--ca", "-1", "--cb", "1", "--cc", "-1")
    assert code == 0
    record = json.loads(out)
    assert record["db"] == "-inf"
    assert record["variance"] == 0


def test_squeeze_number_value(capsys):
    code, out, _ = run(capsys, "squeeze-number", "--r1", "0.5", "--r2", "0.5", "--ca", "-1", "--cb", "1")
    assert code == 0
    assert json.loads(out)["db"] == pytest.approx(-3.65003805, abs=1e-8)


def test_squeeze_quad(capsys):
    code, out, _ = run(capsys, "squeeze-quad", "--r1", "0.5", "--r2", "0.5", "--xa", "1", "--xb", "1", "--xc", "1")
    assert code == 0
    record = json.loads(out)
    assert record["variance"] == pytest.approx(0.265338795, abs=1e-9)
    assert record["snl"] == 0.75


def test_entangle_pi_units(capsys):
    code, out, _ = run(capsys, "entangle", "--r1", "0.5", "--r2", "0.5", "--theta1", "1", "--theta2", "1", "--pi-units")
    assert code == 0
    record = json.loads(out)
    assert record["p2"] == pytest.approx(0.236422986, abs=1e-9)
    assert record["violated2"] is True and record["certified"] is True
    assert record["violated1"] is False and record["violated3"] is False
    assert record["margin2"] == pytest.approx(1 - record["p2"], abs=1e-9)


def test_moments_engines_agree(capsys):
    outs = {}
    for engine in ("fock", "gaussian", "both"):
        code, out, _ = run(capsys, "moments", "--r1", "0.6", "--r2", "0.4", "--theta1", "0.3", "--engine", engine)
        assert code == 0
        outs[engine] = json.loads(out)
    assert outs["fock"].keys() == outs["gaussian"].keys()
    for key, value in outs["fock"].items():
        assert value == pytest.approx(outs["gaussian"][key], rel=1e-8, abs=1e-9)


def test_scan_csv(capsys, tmp_path):
    target = tmp_path / "grid.csv"
    code, out, _ = run(capsys, "scan", "--r1", "0.5", "--r2", "0.5", "--axis1", "theta1=0:2:5",
                       "--axis2", "theta2=0:2:5", "--pi-units", "--observable", "criterion:2",
                       "--engine", "gaussian", "-o", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert "axis1=theta1" in text.splitlines()[1]
    rows = read_csv(text)
    assert len(rows) == 25
    best = min(rows, key=lambda r: float(r["value"]))
    assert float(best["axis1"]) == pytest.approx(math.pi, rel=1e-8)
    assert float(best["axis2"]) == pytest.approx(math.pi, rel=1e-8)


def test_scan_json(capsys):
    code, out, _ = run(capsys, "scan", "--axis1", "r1=0.1:0.3:2", "--axis2", "r2=0.1:0.2:2",
                       "--observable", "number:-1,1,0", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert len(data) == 4 and set(data[0]) == {"axis1", "axis2", "value"}


def test_min_squeeze(capsys):
    code, out, _ = run(capsys, "min-squeeze", "--r2", "0.5", "--engine", "gaussian")
    assert code == 0
    record = json.loads(out)
    assert record["r1_star"] == pytest.approx(2.5541958, abs=1e-5)
    assert record["db_star"] == pytest.approx(-13.0045508, abs=1e-6)


@pytest.mark.parametrize("argv", [
    ["squeeze-number", "--r1", "-0.1"],
    ["squeeze-number", "--r1", "0.1"],  # all coefficients zero: no shot-noise reference
    ["min-squeeze", "--r2", "0"],
    ["scan", "--axis1", "r1=0:1", "--axis2", "r2=0:1:3", "--observable", "criterion:2"],
    ["scan", "--axis1", "r1=0:1:3", "--axis2", "r2=0:1:3", "--observable", "criterion:7"],
    ["entangle", "--engine", "quantum"],
    ["state", "--r1", "4", "--r2", "4"],
])
def test_usage_errors(capsys, argv, monkeypatch):
    monkeypatch.setenv("C3MSV_MAX_PAIRS", "200")
    code = None
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE
    assert capsys.readouterr().err


def test_negative_r1_names_field(capsys):
    code, _, err = run(capsys, "squeeze-number", "--r1", "-0.1")
    assert code == EXIT_USAGE and "r1" in err


def test_engine_mismatch_exit_code(capsys, monkeypatch):
    monkeypatch.setenv(ENGINE_SKEW_ENV, "1e-6")
    code, out, err = run(capsys, "entangle", "--r1", "0.41", "--r2", "0.23", "--engine", "both")
    assert code == EXIT_NUMERICAL
    assert out == "" and "consistency" in err


def test_parse_observable():
    assert parse_observable("criterion:3") == CriterionObservable(3)
    assert parse_observable("uncertainty:").h == (1.0, 1.0, 1.0)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "c3msv", "entangle", "--r1", "0.5", "--r2", "0.5", "--format", "csv"],
        capture_output=True, text=True, check=True,
    )
    rows = read_csv(proc.stdout)
    assert rows[0]["certified"] == "false"


def test_vacuum_entangle(capsys):
    code, out, _ = run(capsys, "entangle")
    record = json.loads(out)
    assert code == 0 and record["certified"] is False
    assert [record[f"p{j}"] for j in (1, 2, 3)] == [4, 4, 4]


def test_vacuum_state_row(capsys):
    code, out, _ = run(capsys, "state")
    rows = read_csv(out)
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["prob"]) == 1.0


def test_vacuum_number_squeezing_degenerate(capsys):
    code, _, err = run(capsys, "squeeze-number", "--ca", "-1", "--cb", "1")
    assert code == EXIT_USAGE and "shot-noise" in err


def test_scan_default_axis(capsys):
    code, out, _ = run(capsys, "scan", "--r1", "0.5", "--r2", "0.5", "--axis1", "theta1",
                       "--axis2", "theta2=0:1:2", "--pi-units", "--observable", "criterion:1",
                       "--engine", "gaussian")
    assert code == 0
    assert len(read_csv(out)) == 201 * 2


def test_scan_output_is_byte_stable(tmp_path):
    args = ["scan", "--axis1", "r1=0.1:0.9:4", "--axis2", "theta1=0:2:3", "--pi-units",
            "--r2", "0.3", "--observable", "quad:1,1,1,0,0,0", "-o"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + [str(a)]) == 0 and main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
