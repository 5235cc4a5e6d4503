import json

import pytest

from delta2d.calibration import dumps, load_fixture
from delta2d.cli import REPORT_COLUMNS, RunConfig, ValidationError, config_from_args, main, render_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_delta_verify(capsys):
    code, out, _ = run(capsys, "delta", "verify", "--Q", "16", "--n", "3,4")
    assert code == 0
    rep = json.loads(out)
    assert rep["n"] == [3, 4] and rep["decomposition_gap"] < 1e-9


def test_guard_exit(capsys):
    code, _, err = run(capsys, "delta", "verify", "--Q", "10000", "--n", "3,4")
    assert code == 3 and json.loads(err)["error"] == "budget"


def test_validation_exits(capsys):
    assert run(capsys, "expsum", "dq", "--pair", "toy3", "--q", "5", "--u", "1,2")[0] == 2
    assert run(capsys, "delta", "verify", "--Q", "16")[0] == 2
    assert run(capsys, "delta", "arcs", "--Q", "16", "--delta", "0.4")[0] == 2
    assert run(capsys, "count", "run", "--pair", "/nonexistent/pair.json", "--P", "4")[0] == 2


def test_expsum_commands(capsys):
    code, out, _ = run(capsys, "expsum", "dq", "--pair", "toy3.json", "--q", "7", "--u", "1,0,2")
    assert code == 0
    fast = json.loads(out)
    code, out, _ = run(capsys, "expsum", "dq", "--pair", "toy3", "--q", "7", "--u", "1,0,2", "--method", "brute")
    brute = json.loads(out)
    assert abs(fast["re"] - brute["re"]) < 1e-8 and abs(fast["im"] - brute["im"]) < 1e-8
    code, out, _ = run(capsys, "expsum", "check", "--pair", "toy3.json", "--max-q", "6", "--max-c", "2")
    assert code == 0


def test_other_commands(capsys):
    assert run(capsys, "lattice", "info", "--a", "1,2", "--q", "5")[0] == 0
    assert run(capsys, "pfunc", "p1", "--Q", "16", "--q", "2", "--w", "0.01,0")[0] == 0
    assert run(capsys, "integral", "iq", "--pair", "diag3", "--w", "0.1,0", "--P", "4")[0] == 0
    code, out, _ = run(capsys, "count", "run", "--pair", "toy3", "--P", "4", "--method", "brute")
    assert code == 0


def test_regression_exit(capsys, tmp_path):
    bad = load_fixture()
    bad["results"]["decomposition"]["toy3,P=4"]["value"] = 1e-3
    path = tmp_path / "bad.json"
    path.write_text(dumps(bad))
    code, _, err = run(capsys, "calibrate", "--check", "--fixture", str(path), "--sections", "decomposition")
    assert code == 4
    assert json.loads(err.strip().splitlines()[-1])["problems"]


def test_run_config_round_trip():
    cfg = config_from_args(["count", "run", "--pair", "ex10", "--P", "8,12", "--seed", "7"])
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    with pytest.raises(ValidationError):
        RunConfig("delta", kernel_tol=1e-3).validate()


def test_csv_layout():
    text = render_csv([{c: 1.5 for c in REPORT_COLUMNS}])
    lines = text.split("\r\n")
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert lines[1].split(",")[0] == "1.5"
