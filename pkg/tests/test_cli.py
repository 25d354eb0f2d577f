import csv
import json
import math
import os

import pytest

from vlebesgue.cli import (EXIT_CONFIG, EXIT_OK, SWEEP_COLUMNS, ConfigError, fmt, main,
                           parse_config)

SMALL_GRID = {"L": 8, "n": 257, "depth": 4}


def _cfg(tmp_path, body, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body, indent=2))
    return str(path)


def _report(out):
    with open(os.path.join(out, "report.json")) as fh:
        return json.load(fh)


def test_norm_example(tmp_path):
    out = str(tmp_path / "o")
    cfg = _cfg(tmp_path, {"grid": SMALL_GRID, "f": {"type": "char", "a": 0, "b": 1}})
    assert main(["--config", cfg, "norm", "--out", out]) == EXIT_OK
    rep = _report(out)
    assert rep["pass"] and rep["order"] == ["norm"]
    with open(os.path.join(out, "norm.csv")) as fh:
        rows = list(csv.reader(fh))
    assert float(rows[1][rows[0].index("value")]) == pytest.approx(1.0, abs=1e-9)
    man = json.load(open(os.path.join(out, "manifest.json")))
    assert set(man["files"]) == {"report.json", "norm.csv"}


def test_ap_check_divergent(tmp_path):
    out = str(tmp_path / "o")
    body = {"grid": SMALL_GRID, "levels": 4,
            "weight": {"kind": "power", "nodes": [0.0], "powers": [0.6], "lambda_inf": 0.0}}
    main(["--config", _cfg(tmp_path, body), "ap-check", "--out", out])
    with open(os.path.join(out, "ap.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert any(r["divergent"] == "true" for r in rows)
    assert any(r["value"] == "+inf" for r in rows)


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "grid": {"n": 257},\n  "levels": ,\n}\n')
    assert main(["--config", str(path), "norm"]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_unknown_key_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "grid": {"n": 257},\n  "colour": 1\n}\n')
    assert main(["--config", str(path), "norm"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 3" in err and "colour" in err


@pytest.mark.parametrize("body", [
    {"grid": {"n": 8}},
    {"grid": {"L": -1}},
    {"levels": 2},
    {"suites": ["nope"]},
    {"lambdas": [0.5]},
    {"weight": {"kind": "power", "nodes": [20.0], "powers": [0.1], "lambda_inf": 0}},
])
def test_invalid_values(body):
    with pytest.raises(ConfigError):
        parse_config(json.dumps(body))


def test_flags_before_or_after_subcommand(tmp_path):
    cfg = _cfg(tmp_path, {"grid": SMALL_GRID})
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["--config", cfg, "--out", a, "modular"]) == EXIT_OK
    assert main(["modular", "--config", cfg, "--out", b]) == EXIT_OK
    assert open(os.path.join(a, "report.json")).read() == open(os.path.join(b, "report.json")).read()


def test_csv_formatting():
    assert fmt(math.inf) == "+inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert fmt(True) == "true" and fmt(3) == "3"
    assert fmt(1 / 3) == "0.333333333333"


def test_deterministic_outputs(tmp_path):
    body = {"grid": SMALL_GRID, "suites": ["apply_s", "apply_m", "norm"]}
    cfg = _cfg(tmp_path, body)
    outs = []
    for k in range(2):
        out = str(tmp_path / f"r{k}")
        assert main(["--config", cfg, "run", "--out", out]) == EXIT_OK
        outs.append(out)
    for fn in ("report.json", "apply_s.csv", "apply_m.csv", "manifest.json"):
        t0 = open(os.path.join(outs[0], fn), "rb").read()
        t1 = open(os.path.join(outs[1], fn), "rb").read()
        if fn == "manifest.json":
            t0, t1 = (json.loads(t)["files"] for t in (t0, t1))
        assert t0 == t1


def test_sweep_columns(tmp_path):
    out = str(tmp_path / "o")
    body = {"grid": {"L": 8, "n": 257, "depth": 4}, "levels": 3, "lambdas": [-0.2, 0.6]}
    assert main(["--config", _cfg(tmp_path, body), "sweep", "--out", out]) == EXIT_OK
    with open(os.path.join(out, "sweep.csv")) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [r[0] for r in rows[1:]] == ["-0.2", "0.6"]
    assert rows[2][1] == "false" and rows[2][2] == "true"
