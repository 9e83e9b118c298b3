import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from specweight.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main, parse_args, UsageError


def run(*args, cwd):
    return subprocess.run([sys.executable, "-m", "specweight.cli", *args], cwd=cwd, capture_output=True, text=True)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_parse_basis():
    cfg = parse_args(["basis", "--builtin", "legendre1d", "--degree", "8", "--out", "b.json"])
    assert cfg.command == "basis" and cfg.degree == 8 and cfg.builtin == "legendre1d"


def test_parse_lshape_defaults():
    cfg = parse_args(["exp", "lshape", "--out", "results/"])
    assert (cfg.command, cfg.subcommand, cfg.degree) == ("exp", "lshape", 4)


@pytest.mark.parametrize("argv", [
    ["basis", "--builtin", "legendre1d", "--degree", "-1", "--out", "b.json"],
    ["basis", "--builtin", "nope", "--degree", "3", "--out", "b.json"],
    ["basis", "--degree", "3", "--out", "b.json"],
    ["exp", "gpc", "--nmax", "0", "--out", "x"],
    ["exp", "decay", "--example", "4", "--out", "x"],
    ["project", "--basis", "b.json", "--function", "nope", "--out", "e.json"],
    ["frobnicate"],
    ["basis", "--builtin", "legendre1d", "--degree", "2", "--out", "b.json", "--oracle-tol", "0"],
])
def test_usage_errors_exit_2(argv):
    assert main(argv) == EXIT_USAGE


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("SPECWEIGHT_THREADS", "3")
    assert parse_args(["exp", "lshape", "--out", "x"]).threads == 3
    assert parse_args(["exp", "lshape", "--out", "x", "--threads", "2"]).threads == 2
    monkeypatch.setenv("SPECWEIGHT_THREADS", "zero")
    with pytest.raises(UsageError):
        parse_args(["exp", "lshape", "--out", "x"])


def test_basis_roundtrip_and_project(tmp_path):
    r = run("basis", "--builtin", "legendre1d", "--degree", "8", "--out", "b.json", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr
    obj = json.loads((tmp_path / "b.json").read_text())
    assert obj["degree"] == 8 and len(obj["coeffs"]) == 9
    from specweight.orthogonalization import OrthonormalBasis
    b = OrthonormalBasis.load(tmp_path / "b.json")
    b.save(tmp_path / "b2.json")
    assert (tmp_path / "b2.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    r = run("project", "--basis", "b.json", "--function", "ex1_f", "--out", "e.json", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr
    e = json.loads((tmp_path / "e.json").read_text())
    assert len(e["coeffs"]) == 9 and len(e["tail_norms"]) == 9


def test_basis_from_config_file(tmp_path):
    (tmp_path / "w.json").write_text(json.dumps({
        "domain": {"type": "interval", "a": 0.0, "b": 1.0},
        "weight": {"type": "constant", "c": 1.0, "normalization": 1.0}}))
    r = run("basis", "--config", "w.json", "--degree", "3", "--out", "b.json", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr


def test_cubature_commands(tmp_path):
    assert run("basis", "--builtin", "legendre1d", "--degree", "5", "--out", "b.json", cwd=tmp_path).returncode == 0
    for name in ("r1.json", "r2.json"):
        r = run("cubature", "build", "--basis", "b.json", "--seed", "7", "--restarts", "2", "--out", name, cwd=tmp_path)
        assert r.returncode == EXIT_OK, r.stderr
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
    r = run("cubature", "apply", "--rule", "r1.json", "--function", "one1d", "--out", "v.json", cwd=tmp_path)
    assert r.returncode == EXIT_OK
    assert float(r.stdout) == pytest.approx(1.0, abs=1e-12)
    r = run("cubature", "verify-theta", "--rule", "r1.json", "--basis", "b.json", "--function", "ex1_f",
            "--theta", "0.5", "--out", "t.csv", cwd=tmp_path)
    assert r.returncode == EXIT_OK
    rows = read_csv(tmp_path / "t.csv")
    assert rows[0] == ["j", "residual", "bound", "pass"] and len(rows) == 7


def test_compare_writes_table(tmp_path):
    r = run("compare", "--builtin1", "legendre1d", "--builtin2", "quadratic1d", "--function", "ex1_f",
            "--degree", "10", "--out", "c.csv", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr
    rows = read_csv(tmp_path / "c.csv")
    assert len(rows) == 12 and all(row[3] == "1" for row in rows[1:])


def test_numerical_failure_exit_1(tmp_path):
    # a basis on a region that is not in the weight's domain fails to orthogonalize
    (tmp_path / "w.json").write_text(json.dumps({
        "domain": {"type": "interval", "a": 2.0, "b": 3.0},
        "weight": {"type": "poly_factor", "terms": [[[0], 0.0]], "normalization": 1.0}}))
    r = run("basis", "--config", "w.json", "--degree", "2", "--out", "b.json", cwd=tmp_path)
    assert r.returncode == EXIT_NUMERICAL
    assert r.stderr


def test_missing_input_file(tmp_path):
    r = run("project", "--basis", "missing.json", "--function", "ex1_f", "--out", "e.json", cwd=tmp_path)
    assert r.returncode == EXIT_USAGE


def test_exp_lshape_outputs(tmp_path):
    r = run("exp", "lshape", "--degree", "2", "--out", "out", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr
    rows = read_csv(tmp_path / "out" / "modified.csv")
    assert rows[0] == ["cell", "x0", "y0", "degree_1", "degree_2"] and len(rows) == 28
    s = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert s["singular_cell"] == 15
    # 17 significant digits
    assert len(rows[1][3].replace(".", "").lstrip("0").split("e")[0]) >= 15


def test_exp_gpc_small(tmp_path):
    r = run("exp", "gpc", "--nmax", "2", "--trials", "1", "--restarts", "4", "--out", "g", cwd=tmp_path)
    assert r.returncode == EXIT_OK, r.stderr
    rows = read_csv(tmp_path / "g" / "H.csv")
    assert rows[0] == ["N", "points", "lambda", "H"] and [row[1] for row in rows[1:]] == ["6", "15"]
