from __future__ import annotations

import csv
import io

import pytest
from numpy.testing import assert_array_equal

from lurbreak import (
    ExperimentSpec,
    ParameterError,
    run_breakdate_accuracy,
    run_estimator_distribution,
    run_experiment,
    run_ols_vs_ivx_comparison,
    run_size_power,
)
from lurbreak.mc import simulate_cell

FAST_NBB = {"nbb_reps": 2000, "nbb_steps": 200}


def _spec(**kw) -> ExperimentSpec:
    base = dict(name="t", test="sup-wald", dgp={"kind": "predictive", "c": 5.0}, n_list=[120],
                reps=100, **FAST_NBB)
    base.update(kw)
    return ExperimentSpec(**base)


# -- config ------------------------------------------------------------------------


def test_spec_validation_names_fields():
    with pytest.raises(ParameterError, match="reps"):
        _spec(reps=50)
    with pytest.raises(ParameterError, match="n_list"):
        _spec(n_list=[200, 100])
    with pytest.raises(ParameterError, match="test"):
        _spec(test="lm")
    with pytest.raises(ParameterError, match="cv"):
        _spec(cv="table")
    with pytest.raises(ParameterError, match="dgp.kind"):
        _spec(dgp={"kind": "garch"})
    with pytest.raises(ParameterError, match="methods"):
        _spec(methods=["gmm"])
    with pytest.raises(ParameterError, match="unknown experiment keys"):
        ExperimentSpec.from_dict({"name": "t", "test": "sup-wald", "dgp": {"kind": "ar1"},
                                  "n_list": [100], "reps": 100, "replications": 5})


def test_runner_test_mismatch():
    with pytest.raises(ParameterError):
        run_breakdate_accuracy(_spec())
    with pytest.raises(ParameterError):
        run_ols_vs_ivx_comparison(_spec())


# -- determinism and accounting ----------------------------------------------------


def test_worker_and_chunk_invariance():
    spec = dict(methods=["ols", "ivx"], reps=120)
    a = run_experiment(_spec(**spec))
    b = run_experiment(_spec(workers=2, chunk=35, **spec))
    assert a.rows == b.rows


def test_common_random_numbers():
    spec = _spec(methods=["ols", "ivx"])
    y1, x1, _ = simulate_cell(spec, 120, None, range(5, 10))
    y2, x2, _ = simulate_cell(spec, 120, None, [7])
    assert_array_equal(y1[2], y2[0])
    assert_array_equal(x1[2], x2[0])


def test_replicate_accounting_and_ranges():
    rep = run_size_power(_spec(reps=150))
    for row in rep.rows:
        assert row["reps"] == 150
        assert row["failed"] == 0
        assert row["valid"]
        assert 0.0 <= row["reject_rate"] <= 1.0
        assert row["reject_se"] >= 0


def test_report_csv_and_summary(tmp_path):
    rep = run_size_power(_spec(bounds={"reject_rate": [0.0, 1.0]}))
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert rows[0]["method"] == "ols"
    assert rep.passed
    assert "t" in rep.summary()


def test_bounds_violation_reported():
    rep = run_size_power(_spec(bounds={"ols:reject_rate": [0.9, 1.0], "nothing": [0, 1]}))
    assert not rep.passed
    assert any("ols:reject_rate" in v for v in rep.violations)
    assert any("no cell" in v for v in rep.violations)


# -- experiments -------------------------------------------------------------------


def test_noiseless_break_dates_exact():
    spec = _spec(test="break-date", intercept="none", n_list=[101, 201], grid_step=None,
                 dgp={"kind": "predictive", "c": 1.0, "beta": [0.0, 2.0], "breaks": [0.4],
                      "sigma_u2": 1e-20})
    rep = run_breakdate_accuracy(spec)
    for row in rep.rows:
        assert row["share_exact"] == 1.0
        assert row["median_abs_dk"] == 0.0


def test_chi2_known_break_size():
    spec = _spec(test="known-break-wald", cv="chi2", n_list=[501], reps=2000,
                 dgp={"kind": "predictive", "phi": 0.5})
    row = run_size_power(spec).rows[0]
    assert row["critical_value"] == pytest.approx(5.991, abs=1e-3)
    assert abs(row["reject_rate"] - 0.05) <= 0.02


def test_power_curve_through_size_point_and_monotone():
    dgp = {"kind": "predictive", "phi": 0.5, "sigma_u2": 1.0, "sigma_v2": 1.0}
    power = run_size_power(_spec(n_list=[201], reps=400, deltas=[0.0, 0.2, 0.4, 0.8],
                                 dgp=dgp, intercept="slope"))
    size = run_size_power(_spec(n_list=[201], reps=400, dgp=dgp, intercept="slope"))
    rates = [r["reject_rate"] for r in power.rows]
    ses = [r["reject_se"] for r in power.rows]
    assert rates[0] == size.rows[0]["reject_rate"]
    for a, b, s in zip(rates, rates[1:], ses[1:]):
        assert b >= a - 2 * s
    assert rates[-1] > 0.9


def test_estimator_distribution_zero_first_slope():
    spec = _spec(test="estimator-dist", n_list=[800], reps=3000, grid_step=None,
                 intercept="none", dgp={"kind": "ar1", "beta1": 0.0, "beta2": 0.8, "tau0": 0.5})
    row = run_estimator_distribution(spec).rows[0]
    assert row["target_var_1"] == pytest.approx(2.0)
    assert abs(row["skew_1"]) < 0.1
    assert row["var_rel_err_1"] < 0.15


def test_break_rows_report_rate_metrics():
    spec = _spec(test="break-date", intercept="none", n_list=[200, 400], grid_step=None,
                 dgp={"kind": "ar1", "beta1": 0.3, "beta2": 0.9, "tau0": 0.5})
    rows = run_breakdate_accuracy(spec).rows
    assert [r["k0"] for r in rows] == [100, 200]
    for r in rows:
        assert r["median_abs_dk"] <= 8
        assert r["sd_n_dtau"] > 0


@pytest.mark.slow
def test_ols_oversized_under_endogeneity():
    spec = _spec(methods=["ols", "ivx"], n_list=[501], reps=2000,
                 dgp={"kind": "predictive", "c": 1.0, "rho": -0.95}, nbb_reps=100_000,
                 nbb_steps=2000)
    rep = run_ols_vs_ivx_comparison(spec)
    by = {r["method"]: r for r in rep.rows}
    assert by["ols"]["reject_rate"] > by["ivx"]["reject_rate"]
    assert by["ols-ivx"]["reject_diff"] > 2 * by["ols-ivx"]["reject_diff_se"]


@pytest.mark.slow
def test_stationary_sizes_agree():
    spec = _spec(methods=["ols", "ivx"], n_list=[501], reps=2000, intercept="slope",
                 dgp={"kind": "predictive", "phi": 0.5, "rho": 0.0}, nbb_reps=100_000,
                 nbb_steps=2000)
    rep = run_ols_vs_ivx_comparison(spec)
    by = {r["method"]: r for r in rep.rows}
    assert abs(by["ols"]["reject_rate"] - by["ivx"]["reject_rate"]) <= 0.02
