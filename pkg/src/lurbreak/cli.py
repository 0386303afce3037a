"""Command-line interface: simulate, estimate, test, limits, experiment."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import dgp as dgp_mod
from .bootstrap import BootstrapSpec, wild_bootstrap
from .breakpoint import TrimSpec, estimate_single_break, estimate_two_breaks_sequential
from .estimators import IvxSpec
from .exceptions import DegenerateSegmentError, ParameterError
from .io import (
    RunManifest,
    manifest_path,
    read_dataset_csv,
    write_dataset_csv,
    write_profile_csv,
    write_values_csv,
)
from .limits import LEVELS, PathGrid, cache_path, critical_values, write_table
from .mc import ExperimentSpec, rows_to_csv, run_experiment
from .wald import sup_wald_scan


class ConfigError(ParameterError):
    pass


def load_config(path: str | Path) -> Any:
    """JSON or YAML by extension (YAML accepts JSON too)."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        return json.loads(text)
    return yaml.safe_load(text)


def _get(cfg: dict, key: str, default=None, *, required: bool = False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"config field {key!r} is required")
    return default


def _field(name: str, fn, *args, **kwargs):
    """Call ``fn`` and prefix any validation error with the offending field name."""
    try:
        return fn(*args, **kwargs)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name}: {exc}") from exc


def _innov(cfg: dict) -> dgp_mod.InnovationParams:
    return _field(
        "innovations", dgp_mod.InnovationParams,
        sigma_u2=float(_get(cfg, "sigma_u2", 0.25)), sigma_v2=float(_get(cfg, "sigma_v2", 0.75)),
        rho=float(_get(cfg, "rho", 0.0)), seed=int(_get(cfg, "seed", 0)),
    )


def _persistence(cfg: dict) -> dgp_mod.PersistenceSpec:
    return _field(
        "c/gamma/sign", dgp_mod.PersistenceSpec,
        c=float(_get(cfg, "c", 0.0)), gamma=float(_get(cfg, "gamma", 1.0)),
        sign=_get(cfg, "sign", "near-stationary"),
    )


SIM_KINDS = ("predictive-null", "predictive-break", "ar1-break", "three-regime", "mean-variance")


def simulate_from_config(cfg: dict) -> dgp_mod.Dataset:
    if not isinstance(cfg, dict):
        raise ConfigError("simulation config must be a mapping")
    kind = _get(cfg, "kind", required=True)
    n = int(_get(cfg, "n", required=True))
    stream = int(_get(cfg, "stream", 0))
    if kind == "predictive-null":
        innov = _innov(cfg)
        return _field(
            "n/c1/gamma", dgp_mod.simulate_predictive_null, n,
            float(_get(cfg, "beta0", 0.0)), float(_get(cfg, "beta1", 0.0)),
            float(_get(cfg, "c1", 0.0)), innov.rho, innov.seed,
            gamma=float(_get(cfg, "gamma", 1.0)), sigma_u2=innov.sigma_u2,
            sigma_v2=innov.sigma_v2, noiseless=bool(_get(cfg, "noiseless", False)), stream=stream,
        )
    if kind == "predictive-break":
        betas = list(_get(cfg, "beta", required=True))
        alphas = list(_get(cfg, "alpha", [0.0] * len(betas)))
        regimes = tuple(dgp_mod.RegimeSpec(a, b) for a, b in zip(alphas, betas))
        config = _field("breaks/beta/alpha", dgp_mod.BreakConfig, n,
                        tuple(_get(cfg, "breaks", required=True)), regimes)
        return dgp_mod.simulate_predictive_break(
            config, _persistence(cfg), _innov(cfg),
            noiseless=bool(_get(cfg, "noiseless", False)), stream=stream,
        )
    if kind == "ar1-break":
        innov = _field("sigma2/seed", dgp_mod.InnovationParams,
                       sigma_u2=float(_get(cfg, "sigma2", 1.0)), sigma_v2=1.0,
                       seed=int(_get(cfg, "seed", 0)))
        drift = _get(cfg, "drift")
        return _field(
            "beta1/beta2/k0", dgp_mod.simulate_ar1_break, n,
            float(_get(cfg, "beta1", required=True)), float(_get(cfg, "beta2", required=True)),
            int(_get(cfg, "k0", required=True)), innov, tuple(drift) if drift else None,
            stream=stream,
        )
    if kind == "three-regime":
        return _field(
            "betas/cs/k1/k2", dgp_mod.simulate_three_regime, n,
            tuple(_get(cfg, "betas", required=True)), tuple(_get(cfg, "cs", required=True)),
            int(_get(cfg, "k1", required=True)), int(_get(cfg, "k2", required=True)), _innov(cfg),
            exponents=tuple(_get(cfg, "exponents", (1.0, 1.0, 1.0))),
            signs=tuple(_get(cfg, "signs", ("near-stationary", "explosive", "near-stationary"))),
            noiseless=bool(_get(cfg, "noiseless", False)), stream=stream,
        )
    if kind == "mean-variance":
        return _field(
            "beta/k1/sigma1/sigma2/k2", dgp_mod.simulate_mean_variance_break, n,
            tuple(_get(cfg, "beta", required=True)), int(_get(cfg, "k1", required=True)),
            float(_get(cfg, "sigma1", 1.0)), float(_get(cfg, "sigma2", 1.0)),
            int(_get(cfg, "k2", required=True)), _persistence(cfg), _innov(cfg), stream=stream,
        )
    raise ConfigError(f"config field 'kind' must be one of {SIM_KINDS}, got {kind!r}")


def _grid_step(text: str) -> float | None:
    if text == "exhaustive":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("grid step must be a number or 'exhaustive'")


def _trim(args) -> TrimSpec:
    return _field("--pi0/--grid-step", TrimSpec, args.pi0, args.grid_step)


def _ivx(args) -> IvxSpec:
    return _field("--cz/--delta", IvxSpec, args.cz, args.delta)


def _load(args) -> dgp_mod.Dataset:
    x_col = None if args.model == "ar1" else args.x_col
    return read_dataset_csv(args.data, args.y_col, x_col, args.model)


def _emit(args, manifest: RunManifest, outputs: list[str], t0: float) -> None:
    manifest.outputs = outputs
    manifest.wall_clock = round(time.perf_counter() - t0, 6)
    if args.manifest:
        manifest.write(args.manifest)
    elif outputs:
        manifest.write(manifest_path(outputs[0]))
    else:
        manifest.write(f"lurbreak-{manifest.subcommand}.manifest.json")


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    data = simulate_from_config(cfg)
    out = Path(args.out)
    write_dataset_csv(data, out, str(args.manifest) if args.manifest else manifest_path(out).name)
    man = RunManifest("simulate", {"config": cfg}, cfg.get("seed"), [str(args.config)])
    _emit(args, man, [str(out)], t0)
    print(f"wrote {data.n} rows to {out}")
    return 0


def cmd_estimate(args) -> int:
    t0 = time.perf_counter()
    data = _load(args)
    trim, ivx = _trim(args), _ivx(args)
    kw = dict(ivx=ivx, residuals=args.ivx_residuals)
    if args.breaks == 1:
        est = estimate_single_break(data, trim, args.method, args.intercept, **kw)
    else:
        est = estimate_two_breaks_sequential(data, trim, args.method, args.intercept, **kw)
    report = {
        "k_hat": list(est.k_hat), "tau_hat": list(est.tau_hat),
        "coefficients": [f.coef.tolist() for f in est.fits],
        "delta_hat": list(est.delta_hat), "rss": est.rss, "first_break": est.first_break,
        "warning": est.warning,
    }
    print(json.dumps(report, indent=2))
    outputs = []
    if args.out:
        write_profile_csv(args.out, est.candidates, est.n, est.rss_profile, "rss")
        outputs.append(str(args.out))
    params = {k: v for k, v in vars(args).items() if k != "func"}
    _emit(args, RunManifest("estimate", params, None, [str(args.data)]), outputs, t0)
    return 0


def cmd_test(args) -> int:
    t0 = time.perf_counter()
    data = _load(args)
    trim, ivx = _trim(args), _ivx(args)
    scan = sup_wald_scan(data, args.method, trim, args.intercept, ivx=ivx)
    record: dict[str, Any] = {
        "statistic": scan.sup_value, "argmax_k": scan.argmax_k, "method": args.method,
        "restrictions": scan.restrictions, "cv_source": args.cv,
    }
    if args.cv == "nbb":
        grid = PathGrid(args.steps, args.reps, args.limit_seed)
        cvs, cached = critical_values(scan.restrictions, trim.pi0, grid)
        record["critical_values"] = {f"{1 - lv:.2f}": v for lv, v in cvs.items()}
        record["cv_cached"] = cached
        record["reject"] = {f"{1 - lv:.2f}": scan.sup_value > v for lv, v in cvs.items()}
    else:
        spec = _field("--B/--weights", BootstrapSpec, args.B, args.weights, args.seed)
        res = wild_bootstrap(data, spec, trim, args.method, args.intercept, ivx=ivx)
        record.update(
            p_value=res.p_value, B=spec.reps, weight_law=spec.weight_law, seed=spec.seed,
            critical_values={f"{1 - lv:.2f}": v for lv, v in res.critical_values.items()},
            reject={f"{1 - lv:.2f}": res.p_value <= 1 - lv for lv in LEVELS},
            warning=res.warning,
        )
        if args.draws_out:
            write_values_csv(args.draws_out, "statistic", res.draws)
    print(json.dumps(record, indent=2))
    outputs = []
    if args.out:
        write_profile_csv(args.out, scan.ks, len(data.y), scan.stats, "wald")
        outputs.append(str(args.out))
    if args.cv == "bootstrap" and args.draws_out:
        outputs.append(str(args.draws_out))
    params = {k: v for k, v in vars(args).items() if k != "func"}
    _emit(args, RunManifest("test", params, args.seed, [str(args.data)]), outputs, t0)
    return 0


def cmd_limits(args) -> int:
    t0 = time.perf_counter()
    grid = _field("--steps/--reps/--seed", PathGrid, args.steps, args.reps, args.seed)
    cvs, cached = critical_values(args.p, args.pi0, grid)
    source = cache_path(args.p, args.pi0, grid)
    print(f"sup-NBB p={args.p} pi0={args.pi0} ({'cache' if cached else 'simulated'}: {source})")
    for lv, v in sorted(cvs.items()):
        print(f"  {1 - lv:.2f}: {v:.4f}")
    outputs = []
    if args.out:
        write_table(Path(args.out), args.p, args.pi0, grid, cvs)
        outputs.append(str(args.out))
    params = {k: v for k, v in vars(args).items() if k != "func"}
    params["cached"] = cached
    _emit(args, RunManifest("limits", params, args.seed, [str(source)]), outputs, t0)
    return 0


def cmd_experiment(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    items = cfg.get("experiments", [cfg]) if isinstance(cfg, dict) else cfg
    if not isinstance(items, list) or not items:
        raise ConfigError("experiment config must be a mapping or a list of experiments")
    specs = []
    for i, item in enumerate(items):
        if args.workers:
            item = {**item, "workers": args.workers}
        specs.append(_field(f"experiments[{i}]", ExperimentSpec.from_dict, item))
    reports = [run_experiment(s) for s in specs]
    ok = True
    rows = []
    for r in reports:
        print(r.summary())
        rows += r.rows
        if r.spec.acceptance and not r.passed:
            ok = False
    outputs = []
    if args.out:
        rows_to_csv(rows, args.out)
        outputs.append(str(args.out))
    man = RunManifest("experiment", {"config": cfg}, None, [str(args.config)])
    _emit(args, man, outputs, t0)
    return 0 if ok else 1


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", help="CSV with a header row")
    p.add_argument("--model", choices=["predictive", "ar1"], default="predictive",
                   help="ar1 regresses y on its own lag and ignores x")
    p.add_argument("--y-col", default="y")
    p.add_argument("--x-col", default="x")
    p.add_argument("--method", choices=["ols", "ivx"], default="ols")
    p.add_argument("--pi0", type=float, default=0.15)
    p.add_argument("--grid-step", type=_grid_step, default=0.01,
                   help="fraction step or 'exhaustive'")
    p.add_argument("--cz", type=float, default=1.0, help="IVX c_z")
    p.add_argument("--delta", type=float, default=0.95, help="IVX exponent")
    p.add_argument("--out", help="profile CSV path")
    p.add_argument("--manifest", help="manifest path (default: next to the first output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lurbreak", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a dataset from a config file")
    p.add_argument("config")
    p.add_argument("out")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate one or two break dates")
    _data_args(p)
    p.add_argument("--breaks", type=int, choices=[1, 2], default=1)
    p.add_argument("--intercept", action="store_true", help="regime-specific intercepts")
    p.add_argument("--ivx-residuals", choices=["instrument", "regressor"], default="instrument")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="sup-Wald test for a single break")
    _data_args(p)
    p.add_argument("--intercept", choices=["joint", "slope", "none"], default="joint")
    p.add_argument("--cv", choices=["nbb", "bootstrap"], default="nbb")
    p.add_argument("--B", type=int, default=399)
    p.add_argument("--weights", choices=["rademacher", "normal"], default="rademacher")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--draws-out", help="bootstrap statistics CSV")
    p.add_argument("--steps", type=int, default=2000, help="sup-NBB grid steps")
    p.add_argument("--reps", type=int, default=100_000, help="sup-NBB replications")
    p.add_argument("--limit-seed", type=int, default=0)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("limits", help="sup-NBB critical-value table")
    p.add_argument("--table", choices=["nbb"], default="nbb")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--pi0", type=float, default=0.15)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("experiment", help="run Monte Carlo experiments from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="report CSV")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, DegenerateSegmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
