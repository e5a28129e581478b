import csv
import json
import subprocess
import sys

import pytest

from tokencycle.cli import main
from tokencycle.report import file_digest


def run(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_monte_carlo_outputs(tmp_path, scenarios_dir, capsys):
    src = scenarios_dir / "headline.scenario"
    assert run("run", src, "--trials", 200, "--seed", 3, "--workers", 1, "--out", tmp_path) == 0
    assert "mean" in capsys.readouterr().out
    rows = read_csv(tmp_path / "trials.csv")
    assert rows[0][0] == "trial_index" and len(rows) == 201
    hist = read_csv(tmp_path / "histogram.csv")
    assert hist[0] == ["bin_lo", "bin_hi", "count"]
    assert sum(int(r[2]) for r in hist[1:]) == 200
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["inputs"][0]["digest"] == file_digest(src)
    assert manifest["master_seed"] == 3 and manifest["n_trials"] == 200
    assert set(manifest["outputs"]) == {"trials.csv", "summary.json", "histogram.csv"}
    assert "tool_version" in manifest and "finished" in manifest


def test_run_is_byte_identical(tmp_path, scenarios_dir):
    src = scenarios_dir / "headline.scenario"
    for name in ("a", "b"):
        assert run("run", src, "--trials", 300, "--seed", 1, "--workers", 1, "--out", tmp_path / name) == 0
    for f in ("trials.csv", "summary.json", "histogram.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_single_trial_flags_std(tmp_path, scenarios_dir):
    assert run("run", scenarios_dir / "headline.scenario", "--trials", 1, "--out", tmp_path) == 0
    assert len(read_csv(tmp_path / "trials.csv")) == 2
    summary = json.loads((tmp_path / "summary.json").read_text())["summary"]
    assert summary["std_defined"] is False and summary["sample_std"] == 0.0


def test_floats_round_trip(tmp_path, scenarios_dir):
    run("run", scenarios_dir / "headline.scenario", "--trials", 20, "--out", tmp_path)
    from tokencycle.montecarlo import run_monte_carlo
    from tokencycle.scenario import load_scenario
    outcomes, _ = run_monte_carlo(load_scenario(scenarios_dir / "headline.scenario").body, 20, 0)
    rows = read_csv(tmp_path / "trials.csv")[1:]
    idx = read_csv(tmp_path / "trials.csv")[0].index("net_benefit")
    assert [float(r[idx]) for r in rows] == [o.net_benefit for o in outcomes]


def test_run_deterministic(tmp_path, scenarios_dir):
    assert run("run", scenarios_dir / "deterministic.scenario", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert len(rows) == 12
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert float(rows[-1][rows[0].index("net_benefit")]) == summary["net_benefit"]


def test_compare(tmp_path, scenarios_dir):
    code = run("compare", scenarios_dir / "tokenized.scenario", scenarios_dir / "subsidy.scenario",
               "--trials", 500, "--out", tmp_path)
    assert code == 0
    paired = read_csv(tmp_path / "paired.csv")
    assert paired[0] == ["trial_index", "tv_draw", "participation_tok", "net_tok", "net_sub", "delta"]
    assert len(paired) == 501
    assert read_csv(tmp_path / "histogram.csv")[0] == ["bin_lo", "bin_hi", "tokenized", "subsidy"]
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert doc["subsidy_participation_std"] == 0.0
    assert len(json.loads((tmp_path / "manifest.json").read_text())["inputs"]) == 2


def test_compare_equivalent_models(tmp_path, scenarios_dir):
    run("compare", scenarios_dir / "tokenized_equal.scenario", scenarios_dir / "subsidy.scenario",
        "--trials", 1000, "--out", tmp_path)
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert abs(doc["mean_delta"]) <= 3 * doc["paired_delta_se"] + 1e-9


def test_compare_rejects_swapped_models(tmp_path, scenarios_dir):
    code = run("compare", scenarios_dir / "subsidy.scenario", scenarios_dir / "subsidy.scenario", "--out", tmp_path)
    assert code == 3


def test_sensitivity(tmp_path, scenarios_dir):
    assert run("sensitivity", scenarios_dir / "deterministic.scenario", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sensitivity.csv")
    header, body = rows[0], rows[1:]
    assert header == ["parameter", "mode", "analytic", "finite_difference", "relative_error"]
    assert all(float(r[4]) <= 1e-6 for r in body)
    sub = next(r for r in body if r[0] == "subsidy")
    assert float(sub[2]) == 1.0 and float(sub[3]) == 1.0 and float(sub[4]) <= 1e-12


def test_sensitivity_at_zero(tmp_path, scenarios_dir):
    run("sensitivity", scenarios_dir / "deterministic.scenario", "--at-time", 0, "--out", tmp_path)
    rows = {(r[0], r[1]): r for r in read_csv(tmp_path / "sensitivity.csv")[1:]}
    assert float(rows[("token_value", "margin")][2]) == 0.0
    assert float(rows[("unit_cost", "margin")][2]) == 0.0


def sweep_means(path):
    return [float(r[1]) for r in read_csv(path / "sweep.csv")[1:]]


def test_sweep_subsidy(tmp_path, scenarios_dir):
    code = run("sweep", scenarios_dir / "headline.scenario", "--param", "subsidy", "--values", "0,1000",
               "--trials", 500, "--workers", 1, "--out", tmp_path)
    assert code == 0
    a, b = sweep_means(tmp_path)
    assert b - a == pytest.approx(1000.0, rel=1e-12)


def test_sweep_monotone(tmp_path, scenarios_dir):
    src = scenarios_dir / "headline.scenario"
    run("sweep", src, "--param", "carbon_credit_price", "--values", "0,1,2,4", "--trials", 500, "--out", tmp_path / "c")
    run("sweep", src, "--param", "unit_cost", "--values", "0,1,2,4", "--trials", 500, "--out", tmp_path / "u")
    c, u = sweep_means(tmp_path / "c"), sweep_means(tmp_path / "u")
    assert c == sorted(c)
    assert u == sorted(u, reverse=True)


def test_sweep_scenario_supplies_values(tmp_path, scenarios_dir):
    assert run("sweep", scenarios_dir / "sweep_carbon.scenario", "--trials", 200, "--out", tmp_path) == 0
    assert len(read_csv(tmp_path / "sweep.csv")) == 5


def test_sweep_unknown_param(tmp_path, scenarios_dir, capsys):
    code = run("sweep", scenarios_dir / "headline.scenario", "--param", "p_max", "--values", "0.1", "--out", tmp_path)
    assert code == 3
    err = capsys.readouterr().err
    assert "unit_cost" in err and "carbon_credit_price" in err


def test_calibrate_boundary(tmp_path, scenarios_dir):
    code = run("calibrate", "--target", -40000, "--config", scenarios_dir / "tokenized_degenerate.scenario",
               "--trials", 2000, "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "comparative.calibration").read_text())
    assert doc["token_sd"] == 0.0 and doc["elasticity"] == 0.0 and doc["trace"]


def test_calibrate_repeatable(tmp_path, scenarios_dir):
    args = ["calibrate", "--target", 50000, "--config", scenarios_dir / "tokenized_uncalibrated.scenario",
            "--trials", 1000, "--seed", 2]
    run(*args, "--out", tmp_path / "a")
    run(*args, "--out", tmp_path / "b")
    a = (tmp_path / "a" / "comparative.calibration").read_bytes()
    assert a == (tmp_path / "b" / "comparative.calibration").read_bytes()


def test_calibrate_unreachable(tmp_path, capsys):
    assert run("calibrate", "--target", 67501, "--trials", 2000, "--out", tmp_path) == 6
    assert "best residual" in capsys.readouterr().err
    doc = json.loads((tmp_path / "comparative.calibration").read_text())
    assert doc["status"] == "unreachable" and doc["best_residual"] > 0


def test_validate(scenarios_dir, capsys):
    assert run("validate", scenarios_dir / "tokenized.scenario") == 0
    assert "tokenized" in capsys.readouterr().out


def test_exit_codes(tmp_path, scenarios_dir):
    assert run("validate", tmp_path / "missing.scenario") == 2
    bad = tmp_path / "bad.scenario"
    bad.write_text(json.dumps({"schema_version": "1.0", "kind": "deterministic", "params": {"p_max": 1.5}, "grid": {}}))
    assert run("validate", bad) == 3
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert run("run", scenarios_dir / "deterministic.scenario", "--out", blocker / "out") == 4
    overflow = tmp_path / "overflow.scenario"
    overflow.write_text(json.dumps({"schema_version": "1.0", "kind": "monte-carlo", "params": {}, "grid": {},
                                    "stochastic_inputs": {"token_value": {"kind": "lognormal", "log_mean": 900,
                                                                          "log_sd": 0}}}))
    assert run("run", overflow, "--trials", 3, "--out", tmp_path / "o") == 5


def test_run_rejects_comparison_kind(tmp_path, scenarios_dir):
    assert run("run", scenarios_dir / "subsidy.scenario", "--out", tmp_path) == 3


def test_console_script(tmp_path, scenarios_dir):
    out = subprocess.run([sys.executable, "-m", "tokencycle.cli", "validate", str(scenarios_dir / "headline.scenario")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "monte-carlo" in out.stdout
