from __future__ import annotations

import json

import numpy as np
import pytest
import yaml

from lurbreak import estimate_single_break
from lurbreak.cli import main
from lurbreak.io import read_dataset_csv

FAST = ["--steps", "200", "--reps", "2000"]


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if name.endswith(".json") else yaml.safe_dump(cfg))
    return path


def _simulate(tmp_path, capsys, cfg, name="data.csv"):
    conf = _write(tmp_path, name + ".yaml", cfg)
    out = tmp_path / name
    code, _, err = _run(capsys, "simulate", conf, out)
    assert code == 0, err
    return out


NULL = {"kind": "predictive-null", "n": 200, "c1": 5.0, "gamma": 0.75, "rho": -0.5, "seed": 3}


# -- simulate ----------------------------------------------------------------------


def test_simulate_shape_and_sidecars(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, NULL)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y,x"
    assert len(lines) == 200  # header plus n - 1 rows
    side = json.loads((tmp_path / "data.csv.meta.json").read_text())
    assert side["rows"] == 199
    assert side["manifest"] == "data.csv.manifest.json"
    man = json.loads((tmp_path / "data.csv.manifest.json").read_text())
    assert man["subcommand"] == "simulate"
    assert man["seed"] == 3
    assert man["outputs"] == [str(out)]
    assert "numpy" in man["versions"]


def test_simulate_deterministic(tmp_path, capsys):
    a = _simulate(tmp_path, capsys, NULL, "a.csv")
    b = _simulate(tmp_path, capsys, NULL, "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_simulate_invalid_rho_names_field(tmp_path, capsys):
    conf = _write(tmp_path, "bad.json", {**NULL, "rho": 1.5})
    code, _, err = _run(capsys, "simulate", conf, tmp_path / "x.csv")
    assert code == 2
    assert "rho" in err


def test_simulate_missing_field(tmp_path, capsys):
    conf = _write(tmp_path, "bad.yaml", {"kind": "ar1-break", "n": 100})
    code, _, err = _run(capsys, "simulate", conf, tmp_path / "x.csv")
    assert code == 2
    assert "beta1" in err


def test_simulate_unknown_kind(tmp_path, capsys):
    conf = _write(tmp_path, "bad.yaml", {"kind": "garch", "n": 100})
    code, _, err = _run(capsys, "simulate", conf, tmp_path / "x.csv")
    assert code == 2 and "kind" in err


def test_simulate_ar_file_has_no_x(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, {"kind": "ar1-break", "n": 120, "beta1": 0.2,
                                       "beta2": 0.9, "k0": 60, "seed": 1})
    assert out.read_text().splitlines()[0] == "t,y"


# -- estimate ----------------------------------------------------------------------


def test_estimate_matches_library(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, {"kind": "predictive-break", "n": 301, "breaks": [150],
                                       "beta": [0.0, 0.6], "c": 2.0, "seed": 4})
    prof = tmp_path / "rss.csv"
    code, text, _ = _run(capsys, "estimate", out, "--out", prof)
    assert code == 0
    report = json.loads(text)
    lib = estimate_single_break(read_dataset_csv(out))
    assert report["k_hat"] == list(lib.k_hat)
    assert report["coefficients"] == [f.coef.tolist() for f in lib.fits]
    assert prof.read_text().splitlines()[0] == "k,tau,rss"
    assert (tmp_path / "rss.csv.manifest.json").exists()


def test_estimate_two_breaks_ascending(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, {"kind": "three-regime", "n": 600, "betas": [0, 1, 2],
                                       "cs": [1, 2, 1], "k1": 200, "k2": 400, "seed": 3,
                                       "noiseless": True})
    code, text, _ = _run(capsys, "estimate", out, "--breaks", 2, "--grid-step", "exhaustive")
    assert code == 0
    assert json.loads(text)["k_hat"] == [200, 400]


def test_estimate_ar_model(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, {"kind": "ar1-break", "n": 400, "beta1": 0.0,
                                       "beta2": 0.9, "k0": 200, "seed": 1})
    code, text, _ = _run(capsys, "estimate", out, "--model", "ar1")
    assert code == 0
    data = read_dataset_csv(out, x_col=None, model="ar1")
    assert json.loads(text)["k_hat"] == list(estimate_single_break(data).k_hat)


def test_estimate_missing_column(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, NULL)
    code, _, err = _run(capsys, "estimate", out, "--x-col", "z")
    assert code == 2
    assert "'z'" in err


def test_estimate_short_series(tmp_path, capsys):
    path = tmp_path / "short.csv"
    path.write_text("t,y,x\n1,1,2\n2,2,1\n3,3,1\n")
    code, _, err = _run(capsys, "estimate", path)
    assert code == 2 and err.startswith("error:")


# -- test --------------------------------------------------------------------------


def test_test_nbb_huge_break_rejects(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, {"kind": "predictive-break", "n": 301, "breaks": [150],
                                       "alpha": [0.0, 3.0], "beta": [0.0, 0.0], "c": 2.0,
                                       "seed": 5})
    code, text, _ = _run(capsys, "test", out, *FAST)
    rec = json.loads(text)
    assert code == 0
    assert rec["reject"]["0.01"] is True
    assert rec["cv_source"] == "nbb"
    assert rec["cv_cached"] is False
    code, text, _ = _run(capsys, "test", out, *FAST)
    assert json.loads(text)["cv_cached"] is True


def test_test_bootstrap_p_value_range(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, NULL)
    draws = tmp_path / "draws.csv"
    code, text, _ = _run(capsys, "test", out, "--cv", "bootstrap", "--B", 399, "--method", "ivx",
                         "--draws-out", draws)
    rec = json.loads(text)
    assert code == 0
    assert 1 / 400 <= rec["p_value"] <= 1.0
    assert rec["B"] == 399 and rec["weight_law"] == "rademacher"
    assert len(draws.read_text().splitlines()) == 400


def test_test_null_files_accept_mostly(tmp_path, capsys):
    accept = 0
    for seed in range(40):
        out = _simulate(tmp_path, capsys, {**NULL, "n": 300, "seed": seed}, f"n{seed}.csv")
        _, text, _ = _run(capsys, "test", out, "--method", "ivx", "--intercept", "slope", *FAST)
        accept += not json.loads(text)["reject"]["0.05"]
    assert accept >= 34


def test_test_manifest_explicit_path(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, NULL)
    man = tmp_path / "m.json"
    _run(capsys, "test", out, "--manifest", man, *FAST)
    rec = json.loads(man.read_text())
    assert rec["subcommand"] == "test"
    assert rec["parameters"]["pi0"] == 0.15
    assert rec["parameters"]["cz"] == 1.0


# -- limits and experiment ---------------------------------------------------------


def test_limits_table_and_cache(tmp_path, capsys):
    table = tmp_path / "nbb.csv"
    code, text, _ = _run(capsys, "limits", "--p", 1, "--pi0", 0.15, *FAST, "--out", table)
    assert code == 0 and "simulated" in text
    lines = [ln for ln in table.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "p,pi0,level,value"
    assert [ln.split(",")[2] for ln in lines[1:]] == ["0.9", "0.95", "0.99"]
    code, text2, _ = _run(capsys, "limits", "--p", 1, "--pi0", 0.15, *FAST)
    assert "cache" in text2
    assert text.splitlines()[1:] == text2.splitlines()[1:]


def _experiment(bounds):
    return {"name": "e", "test": "known-break-wald", "cv": "chi2", "reps": 200,
            "n_list": [201], "dgp": {"kind": "predictive", "phi": 0.5}, "acceptance": True,
            "bounds": bounds}


def test_experiment_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, "good.yaml", {"experiments": [_experiment({"reject_rate": [0, 0.2]})]})
    report = tmp_path / "rep.csv"
    code, _, _ = _run(capsys, "experiment", good, "--out", report)
    assert code == 0
    assert report.read_text().startswith("experiment,")
    bad = _write(tmp_path, "bad.yaml", _experiment({"reject_rate": [0.5, 1.0]}))
    code, _, _ = _run(capsys, "experiment", bad)
    assert code == 1
    assert (tmp_path / "lurbreak-experiment.manifest.json").exists()


def test_experiment_bad_key(tmp_path, capsys):
    conf = _write(tmp_path, "bad.json", {**_experiment({}), "replicates": 3})
    code, _, err = _run(capsys, "experiment", conf)
    assert code == 2 and "replicates" in err


def test_round_trip_into_test(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, NULL)
    data = read_dataset_csv(out)
    assert np.all(np.isfinite(data.y))
    code, _, _ = _run(capsys, "test", out, "--method", "ivx", *FAST)
    assert code == 0


def test_unreadable_config(tmp_path, capsys):
    code, _, err = _run(capsys, "simulate", tmp_path / "missing.yaml", tmp_path / "o.csv")
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = _run(capsys, "simulate", bad, tmp_path / "o.csv")
    assert code == 2


def test_cli_entry_point_help(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "simulate" in capsys.readouterr().out
