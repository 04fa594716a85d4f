import json
import subprocess
import sys

import numpy as np
import pytest

from hypsolve.cli import dumps, run
from hypsolve.problem import apply_overrides, example5_declaration

SMALL = ["--set", "grid.M=256"]


def load(path):
    return json.loads(path.read_text())


def test_dumps_formatting():
    text = dumps({"a": 0.1, "b": [1, np.float64(2.5)], "c": float("inf"), "d": None, "e": np.bool_(True)})
    data = json.loads(text)
    assert data == {"a": 0.1, "b": [1, 2.5], "c": "inf", "d": None, "e": True}
    assert "0.10000000000000001" in text


def test_overrides():
    d = apply_overrides(example5_declaration(), ["grid.M=512", "lambda=0.5", "nonlinearity.r=1.25", "tag=abc"])
    assert d["grid"]["M"] == 512 and d["lambda"] == 0.5 and d["nonlinearity"]["r"] == 1.25 and d["tag"] == "abc"
    with pytest.raises(ValueError):
        apply_overrides({}, ["novalue"])


def test_geomcheck(tmp_path):
    assert run(["--command", "geomcheck", "--out", str(tmp_path)]) == 0
    rep = load(tmp_path / "geomcheck.json")
    assert rep["all_passed"] and all(rep["checks"].values())


def test_threshold_report_embeds_configuration(tmp_path):
    assert run(["--command", "threshold", "--out", str(tmp_path), "--seed", "3", *SMALL]) == 0
    rep = load(tmp_path / "threshold.json")
    assert rep["caveat"] == "c_q: discrete radial estimate"
    assert rep["run"]["seed"] == 3 and rep["run"]["problem"]["grid"]["M"] == 256
    assert rep["run"]["overrides"] == ["grid.M=256"]
    assert rep["lambda_star"] > 0


def test_testfn_outputs(tmp_path):
    assert run(["--command", "testfn", "--out", str(tmp_path), *SMALL]) == 0
    for name in ("ratio_blowup.csv", "negativity.csv"):
        assert (tmp_path / name).read_text().startswith("t,Phi,Psi,ratio,J_lambda,in_sublevel\n")
    summary = load(tmp_path / "testfn.json")
    assert summary["blowup"] and summary["first_negative_t"] is not None


def test_solve_and_sweep(tmp_path):
    assert run(["--command", "solve", "--out", str(tmp_path / "s"), *SMALL]) == 0
    rep = load(tmp_path / "s" / "solve_report.json")
    assert rep["nontrivial"] and rep["converged"] and rep["verified"] and rep["energy"] < 0
    assert (tmp_path / "s" / "minimizer.csv").read_text().startswith("rho,value\n")
    assert run(["--command", "sweep", "--out", str(tmp_path / "w"), *SMALL]) == 0
    sw = load(tmp_path / "w" / "sweep_report.json")
    assert sw["strictly_decreasing"] and sw["bound_holds"] and not sw["aborted"]
    assert len((tmp_path / "w" / "sweep.csv").read_text().splitlines()) == 9


def test_example5_above_threshold_warns(tmp_path):
    assert run(["--command", "example5", "--out", str(tmp_path), *SMALL, "--set", "lambda=1000"]) == 0
    assert "lambda >= lambda_star" in load(tmp_path / "example5.json")["warnings"]


def test_sweep_nondecreasing_lambdas_is_invalid(tmp_path):
    assert run(["--command", "sweep", "--out", str(tmp_path), *SMALL, "--set", "lambdas=[1, 2]"]) == 1


def test_nonconvergence_exit_code(tmp_path):
    assert run(["--command", "solve", "--out", str(tmp_path), *SMALL, "--set", "solver.max_iters=1"]) == 2


def test_invalid_inputs(tmp_path):
    assert run(["--command", "threshold", "--out", str(tmp_path), "--problem", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["--command", "threshold", "--out", str(tmp_path), "--problem", str(bad)]) == 1
    assert run(["--command", "threshold", "--out", str(tmp_path), "--set", "q=6"]) == 1  # q at 2* for N = 4
    assert run(["--command", "threshold", "--out", str(tmp_path), "--set", "nonlinearity.kind=cubic"]) == 1
    with pytest.raises(SystemExit) as exc:
        run(["--command", "nope"])
    assert exc.value.code == 1


def test_problem_file_roundtrip(tmp_path):
    decl = {**example5_declaration(r=1.25), "grid": {"M": 256, "R_max": 10.0, "quad_order": 6}, "lambda": 5.0}
    (tmp_path / "p.json").write_text(json.dumps(decl))
    assert run(["--command", "solve", "--problem", str(tmp_path / "p.json"), "--out", str(tmp_path)]) == 0
    rep = load(tmp_path / "solve_report.json")
    assert rep["lambda"] == 5.0 and rep["run"]["problem"]["nonlinearity"]["r"] == 1.25


def test_byte_identical_reruns(tmp_path):
    for d in ("a", "b"):
        assert run(["--command", "testfn", "--out", str(tmp_path / d), "--seed", "7", *SMALL]) == 0
    for name in ("testfn.json", "ratio_blowup.csv", "negativity.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hypsolve", "--command", "geomcheck", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
