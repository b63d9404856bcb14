import csv
import io
import json
import math
import subprocess
import sys

import pytest

from weakflow import cli
from weakflow.errors import NumericalFailure
from weakflow.limits import RegimeReport

FAST = ["--steps", "400"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_weak_value_examples(capsys):
    code, out, _ = run(capsys, "weak-value", "--theta", "1.2")
    assert code == 0
    (r,) = rows(out)
    assert float(r["value_re"]) == pytest.approx(math.tan(1.2), abs=1e-12)
    assert r["anomalous"] == "true"
    code, out, _ = run(capsys, "weak-value", "--theta", "0.3", "--post", "pre", "--operator", "sigma_z")
    (r,) = rows(out)
    assert float(r["value_re"]) == pytest.approx(math.cos(0.6), abs=1e-15)
    assert r["anomalous"] == "false"


def test_orthogonal_exit_2(capsys):
    code, out, err = run(capsys, "weak-value", "--theta", "1.57079632")
    assert code == 2 and out == ""
    e = json.loads(err)
    assert e["schema"] == "weakflow/1"
    assert e["error"]["type"] == "OrthogonalSelection" and e["error"]["exit_code"] == 2


@pytest.mark.parametrize("argv", [
    ["weak-value", "--theta", "1.6"],
    ["weak-value", "--theta", "abc"],
    ["weak-value", "--operator", "sigma_w"],
    ["aav", "--n-points", "1000"],
    ["aav", "--eps", "0"],
    ["series-compare", "--steps", "0"],
    ["series-compare", "--order", "9"],
    ["regimes", "--thetas", "0.3", "2.0"],
    ["nonsense"],
    ["weak-value", "--no-such-flag"],
    [],
])
def test_config_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == ""
    assert json.loads(err)["error"]["exit_code"] == 1


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def boom(params):
        raise NumericalFailure("degenerate")
    monkeypatch.setitem(cli.COMMANDS, "transition", boom)
    code, _, err = run(capsys, "transition")
    assert code == 3 and json.loads(err)["error"]["type"] == "NumericalFailure"


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nformat = json\n\n[weak-value]\ntheta = 0.5\noperator = sigma_z\n")
    code, out, _ = run(capsys, "weak-value", "--config", str(cfg))
    doc = json.loads(out)
    assert code == 0 and doc["records"][0]["theta"] == 0.5
    assert doc["records"][0]["operator"] == "sigma_z"
    code, out, _ = run(capsys, "weak-value", "--config", str(cfg), "--theta", "0.9", "--format", "csv")
    (r,) = rows(out)
    assert r["theta"] == "0.9" and r["operator"] == "sigma_z"


@pytest.mark.parametrize("text", [
    "[weak-value]\nthetaa = 1\n",
    "[mystery]\nx = 1\n",
    "[run]\ncolour = red\n",
    "[aav]\nbogus = 1\n",
    "[weak-value]\ntheta = 1.2\noutput = x.csv\n",
    "not an ini file",
])
def test_config_rejections(capsys, tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    code, _, err = run(capsys, "weak-value", "--config", str(cfg))
    assert code == 1 and json.loads(err)["error"]["type"] == "ConfigError"


def test_missing_config_file(capsys, tmp_path):
    code, _, _ = run(capsys, "weak-value", "--config", str(tmp_path / "absent.ini"))
    assert code == 1


def test_series_compare_table(capsys):
    code, out, _ = run(capsys, "series-compare", "--order", "8")
    assert code == 0
    header = out.splitlines()[0]
    assert header == "order,exact_re,exact_im,weak_re,weak_im,abs_diff,exact_residual,weak_residual"
    rs = rows(out)
    assert [int(r["order"]) for r in rs] == list(range(9))
    assert float(rs[0]["abs_diff"]) == 0.0 and float(rs[1]["abs_diff"]) == 0.0
    assert float(rs[-1]["weak_residual"]) <= 1e-8


def test_aav_rows(capsys):
    code, out, _ = run(capsys, "aav", "--eps", "2e-3", "1e-3", "5e-4")
    rs = rows(out)
    assert code == 0 and len(rs) == 3
    res = [abs(float(r["A_w_re_est"]) - float(r["A_w_exact_re"])) for r in rs]
    assert res[0] > res[1] > res[2]
    assert abs(float(rs[-1]["success_prob"]) - math.cos(1.2) ** 2) < 1e-3


def test_transition_rows(capsys):
    code, out, _ = run(capsys, "transition", "--eps-a", "0", "--eps-st-qx", "0")
    assert code == 0 and float(rows(out)[0]["residual"]) <= 1e-12
    code, out, _ = run(capsys, "transition")
    assert float(rows(out)[0]["residual"]) <= 1e-3
    # deep outside the window: still reported, still exit 0
    code, out, _ = run(capsys, "transition", "--theta", "0.7854", "--n", "8", "--eps-a", "2", "--eps-st-qx", "3")
    assert code == 0 and math.isfinite(float(rows(out)[0]["residual"]))


def test_regimes_rows_and_json_round_trip(capsys):
    code, out_csv, _ = run(capsys, "regimes", *FAST)
    assert code == 0 and len(rows(out_csv)) == 96
    code, out_json, _ = run(capsys, "regimes", *FAST, "--format", "json")
    doc = json.loads(out_json)
    assert doc["schema"] == "weakflow/1" and doc["command"] == "regimes"
    reps = [RegimeReport.from_dict(r) for r in doc["records"]]
    assert len(reps) == 96
    # CSV and JSON carry the same numbers
    for r_csv, r_json in zip(rows(out_csv), doc["records"]):
        for k, v in r_json.items():
            assert r_csv[k] == (v if isinstance(v, str) else repr(v))


@pytest.mark.parametrize("command", list(cli.COMMANDS))
def test_json_records_reparse_bit_equal(capsys, command):
    argv = [command, "--format", "json"] + (FAST if command == "regimes" else [])
    code, out, _ = run(capsys, *argv)
    doc = json.loads(out)
    parsed = [cli.parse_record(command, r) for r in doc["records"]]
    again = cli.render_json(parsed, command, {})
    assert json.loads(again)["records"] == doc["records"]
    for rec, obj in zip(doc["records"], parsed):
        d = obj.to_dict() if isinstance(obj, RegimeReport) else vars(obj)
        for k, v in rec.items():
            assert type(d[k]) is type(v) and d[k] == v


@pytest.mark.parametrize("command", list(cli.COMMANDS))
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_output_file_deterministic(tmp_path, command, fmt):
    extra = FAST if command == "regimes" else []
    paths = [tmp_path / f"{i}.{fmt}" for i in range(2)]
    for p in paths:
        assert cli.main([command, "--format", fmt, "--output", str(p), *extra]) == 0
    a, b = (p.read_bytes() for p in paths)
    assert a == b and a.endswith(b"\n") and b"\r" not in a


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "weakflow.cli", "weak-value", "--theta", "1.2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("theta,operator,post")
