import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from witsolve.cli import SWEEP_HEADER, run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


T4 = ["--k", "0.2", "--sigma", "1", "--sigma-x", "5"]


def test_rule_order_one(capsys):
    code, out, _ = call(capsys, "rule", "--order", "1")
    assert code == 0
    assert out.splitlines() == ["index,node,weight", f"1,0,{math.sqrt(math.pi):.17g}"]


def test_rule_order_seven(capsys):
    code, out, _ = call(capsys, "rule", "--order", "7")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 7
    assert float(rows[6]["node"]) == pytest.approx(2.651961356835233, rel=1e-14)
    assert float(rows[3]["weight"]) == pytest.approx(0.810264617556807, rel=1e-14)


@pytest.mark.parametrize("argv", [
    ["rule", "--order", "0"],
    ["rule", "--order", "65"],
    ["rule", "--bogus"],
    ["frobnicate"],
    ["solve", "--k", "0", "--sigma", "1", "--sigma-x", "5"],
    ["solve", "--k", "0.2", "--sigma", "1"],
    ["eval", "--profile", "affine", "--k", "1", "--sigma", "2", "--sigma-x", "1"],
])
def test_invalid_input_exit_two(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_solve(capsys):
    code, out, _ = call(capsys, "solve", *T4, "--order", "7")
    res = json.loads(out)
    assert code == 0 and res["converged"]
    np.testing.assert_allclose(res["levels"], [-19.8, -12.8, -6.15, 0, 6.15, 12.8, 19.8], atol=0.1)
    assert {"residual_inf", "residual_2", "start", "iterations"} <= set(res)


def test_solve_no_convergence(capsys):
    code, out, _ = call(capsys, "solve", *T4, "--max-iter", "1", "--starts", "sign")
    assert code == 3 and json.loads(out)["converged"] is False


def test_curve_no_convergence(capsys, tmp_path):
    code, _, _ = call(capsys, "curve", *T4, "--max-iter", "1", "--starts", "sign",
                      "--output", str(tmp_path / "c.csv"))
    assert code == 3


def test_eval_sign(capsys):
    code, out, _ = call(capsys, "eval", "--profile", "sign", *T4, "--samples", "600000", "--seed", "1")
    rep = json.loads(out)
    assert code == 0
    assert abs(rep["total"] - 0.403509876) <= 3 * rep["se_total"]
    assert rep["seed"] == 1 and rep["n_samples"] == 600000 and rep["bound_ok"] is True


def test_curve_round_trip(capsys, tmp_path):
    path = tmp_path / "curve.csv"
    code, _, _ = call(capsys, "curve", *T4, "--output", str(path))
    assert code == 0
    assert path.read_text().splitlines()[0] == "x0,gamma1bar,gamma1,gamma2_at_g1bar"
    side = json.loads(path.with_suffix(".json").read_text())
    assert side["provenance"] == "pbp" and side["gamma2"]["family"] == "mixture-from-levels"
    _, a, _ = call(capsys, "eval", "--profile", str(path), *T4, "--samples", "50000", "--seed", "9")
    _, b, _ = call(capsys, "eval", "--profile", "pbp", *T4, "--samples", "50000", "--seed", "9")
    assert json.loads(a) == json.loads(b)


def test_exact_curve_flag(capsys, tmp_path):
    path = tmp_path / "c.csv"
    call(capsys, "curve", "--k", "1", "--sigma", "1", "--sigma-x", "1", "--output", str(path))
    code, out, _ = call(capsys, "eval", "--profile", str(path), "--k", "1", "--sigma", "1",
                        "--sigma-x", "1", "--samples", "5000", "--exact-curve")
    assert code == 0 and json.loads(out)["total"] == pytest.approx(0.4186, abs=0.03)


def test_eval_external_tabulated(capsys, tmp_path):
    path = tmp_path / "ext.csv"
    path.write_text("x0,gamma1bar\n-100,-100\n100,100\n")
    (tmp_path / "ext.json").write_text(json.dumps(
        {"gamma2": {"family": "tabulated", "y1": [-1, 1], "gamma2": [0, 0]}}))
    code, out, _ = call(capsys, "eval", "--profile", str(path), *T4, "--samples", "20000")
    rep = json.loads(out)
    assert code == 0 and rep["stage1"] < 1e-20 and rep["family"] == "external"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_eval_failure_exit_four(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,gamma1bar\n-1,-1\n1,1\n")
    (tmp_path / "bad.json").write_text(json.dumps({"gamma2": {"family": "affine", "mu": 1e308}}))
    code, _, _ = call(capsys, "eval", "--profile", str(path), *T4, "--samples", "1000")
    assert code == 4


@pytest.mark.parametrize("family", ["affine", "sign", "bansal-basar"])
def test_baseline(capsys, tmp_path, family):
    path = tmp_path / f"{family}.csv"
    params = ["--k", "0.01", "--sigma", "1", "--sigma-x", str(math.sqrt(80))]
    code, _, _ = call(capsys, "baseline", "--family", family, *params, "--output", str(path))
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert len(rows) >= 2001
    side = json.loads(path.with_suffix(".json").read_text())
    if family == "affine":
        assert set(side["law"]) >= {"nu", "mu", "t", "all_real_roots"}


def test_compare_table4(capsys):
    code, out, _ = call(capsys, "compare", "--params-set", "table4", "--format", "csv",
                        "--samples", "60000")
    rows = list(csv.DictReader(io.StringIO(out)))
    labels = [r["label"] for r in rows]
    assert code == 0
    assert {"J^o", "J^wit", "J^aff", "J^nn", "J^llh"} <= set(labels)
    totals = [float(r["total"]) for r in rows]
    assert totals == sorted(totals)


def test_sweep_empty_grid(capsys, tmp_path):
    grid = tmp_path / "g.json"
    grid.write_text("[]")
    code, out, _ = call(capsys, "sweep", "--grid", str(grid))
    assert code == 0 and out == ",".join(SWEEP_HEADER) + "\n"


def test_sweep_flags_bad_point(capsys, tmp_path):
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps([{"k": 0, "sigma": 1, "sigma_x": 1},
                                {"k": 1, "sigma": 1, "sigma_x": 1, "order": 7}]))
    code, out, _ = call(capsys, "sweep", "--grid", str(grid), "--samples", "20000")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["status"] for r in rows] == ["validation-error", "ok"]
    assert rows[1]["bound_ok"] == "true"
    assert float(rows[1]["total"]) == pytest.approx(0.4186, abs=0.02)


def test_config_file_overridden_by_flags(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k": 0.2, "sigma": 1, "sigma-x": 5, "samples": 1000, "seed": 4}))
    _, a, _ = call(capsys, "--config", str(cfg), "eval", "--profile", "sign")
    _, b, _ = call(capsys, "--config", str(cfg), "eval", "--profile", "sign", "--seed", "5")
    ra, rb = json.loads(a), json.loads(b)
    assert ra["n_samples"] == 1000 and ra["seed"] == 4 and rb["seed"] == 5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "witsolve", "rule", "--order", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 3


@pytest.mark.slow
def test_sweep_reference_preset(capsys):
    code, out, _ = call(capsys, "sweep", "--preset", "reference", "--samples", "50000")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert all(r["status"] == "ok" and r["bound_ok"] == "true" for r in rows)
