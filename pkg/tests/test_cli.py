import csv
import io
import json
import subprocess
import sys

import pytest

from vhetnet import cli

COVERAGE_HEADER = ("variable,value,r_u,r_e,lambda_A,method,p_analytic,p_analytic_err,p_mc,"
                   "p_mc_ci95,abs_diff")
ASSOC_HEADER = ("r_e,r_u,lambda_A,A_L,A_N,A_T,A_T_direct,A_L_mc,A_N_mc,A_T_mc,A_L_mc_ci95,"
                "A_N_mc_ci95,A_T_mc_ci95")
MIN_HEADER = "lambda_A,r_e,source,p_min,argmin_r_u,is_best_r_e"
VALIDATE_HEADER = "check,r_u,value,reference,tolerance,status"


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_grid():
    assert cli.parse_grid("0:30:3") == [0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30]
    assert cli.parse_grid("0:1:0.1")[-1] == 1.0
    assert cli.parse_grid("4, 8,12") == [4, 8, 12]
    for bad in ("", " ", "1:2", "1:2:0", "a,b", "3:1:1"):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(bad)
    assert len(cli.r_u_grid(True)) == 31


def test_coverage_sweep_header_and_monotone_without_abs(capsys):
    code, out, _ = run(["coverage-sweep", "--grid", "0:30:10", "--set", "lambda_A=0"], capsys)
    assert code == 0
    assert out.splitlines()[0] == COVERAGE_HEADER
    vals = [float(r["p_analytic"]) for r in rows(out)]
    assert len(vals) == 4
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_association_sweep_without_abs(capsys):
    code, out, _ = run(["association-sweep", "--grid", "0,8,20", "--r-e", "8",
                        "--set", "lambda_A=0"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ASSOC_HEADER
    assert [float(r["A_T"]) for r in rows(out)] == [1.0, 1.0, 1.0]


def test_min_coverage_without_abs_is_flat(capsys):
    code, out, _ = run(["min-coverage", "--r-e", "0,8", "--lambda-a", "0"], capsys)
    assert code == 0
    assert out.splitlines()[0] == MIN_HEADER
    r = rows(out)
    assert float(r[0]["p_min"]) == pytest.approx(float(r[1]["p_min"]), abs=1e-8)
    assert sum(int(x["is_best_r_e"]) for x in r) == 1


def test_mc_output_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        code, _, _ = run(["coverage-sweep", "--grid", "4,12", "--method", "mc", "--mc-n", "500",
                          "--seed", "9", "--out", str(path)], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0] == COVERAGE_HEADER
    meta = json.loads((tmp_path / "run0.csv.json").read_text())
    assert meta["seed"] == 9 and meta["params"]["lambda_A"] == 0.15


def test_gnuplot_layout(capsys):
    code, out, _ = run(["association-sweep", "--grid", "0,20", "--r-e", "0,8", "--format",
                        "gnuplot", "--set", "lambda_A=0"], capsys)
    assert code == 0
    assert out.startswith("# r_e r_u")
    assert "\n\n\n" in out
    assert "nan" in out


@pytest.mark.parametrize("argv", [
    ["coverage-sweep", "--grid", ""],
    ["coverage-sweep", "--grid", "1:2"],
    ["coverage-sweep", "--set", "bogus=1"],
    ["coverage-sweep", "--set", "alpha_T=2"],
    ["coverage-sweep", "--set", "noequals"],
    ["coverage-sweep", "--config", "/nonexistent/file.cfg"],
    ["coverage-sweep", "--var", "lambda_A"],
    ["coverage-sweep", "--method", "mc", "--mc-n", "10"],
    ["coverage-sweep", "--grid", "4", "--method", "analytic-exact", "--set", "m_L=3"],
    ["teleport"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("lambda_A = 0\nr_e = 4\n")
    code, out, _ = run(["association-sweep", "--config", str(cfg), "--grid", "5"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert float(r["A_T"]) == 1.0 and float(r["r_e"]) in (0.0, 4.0, 8.0, 12.0)


def test_validate_small_sample_is_inconclusive(capsys):
    code, out, err = run(["validate", "--grid", "12", "--mc-n", "50"], capsys)
    assert code == 0
    assert out.splitlines()[0] == VALIDATE_HEADER
    status = [r["status"] for r in rows(out)]
    assert "INCONCLUSIVE" in status and "WARN" in status
    assert "FAIL" not in status
    assert "failed" in err


def test_validate_failure_exits_1(monkeypatch, capsys):
    real = cli.cov.coverage

    def wrong(*a, **k):
        res = real(*a, **k)
        return type(res)(min(1.0, res.p_total + 0.3), res.per_kind, res.method, res.abs_error,
                         res.diagnostics)

    monkeypatch.setattr(cli.cov, "coverage", wrong)
    # 5000 runs: the 95% CI is narrower than the 0.02 tolerance
    code, out, _ = run(["validate", "--grid", "12", "--mc-n", "5000"], capsys)
    assert code == 1
    failed = [r["check"] for r in rows(out) if r["status"] == "FAIL"]
    assert failed == ["coverage_approx_vs_mc"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "vhetnet", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.strip()
