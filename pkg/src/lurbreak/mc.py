"""Monte Carlo harness: size/power, break-date accuracy and estimator distributions.

Replicate ``r`` of every cell is simulated from stream ``r`` of the
experiment seed, so methods, sample sizes and break magnitudes are compared on
common random numbers. Work is split into replicate chunks that may run in
worker processes; results are reduced in chunk order, so every number is
independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .bootstrap import BootstrapSpec, wild_bootstrap
from .breakpoint import METHODS, TrimSpec, single_break_batch
from .dgp import (
    BreakConfig,
    InnovationParams,
    PersistenceSpec,
    RegimeSpec,
    ar1_break_batch,
    ar_regressor,
    predictive_break_batch,
)
from .estimators import IvxSpec, ivx_instrument
from .exceptions import ParameterError
from .limits import PathGrid, critical_values
from .wald import INTERCEPT_MODES, restrictions, sup_wald_batch, wald_at_batch

TESTS = ("sup-wald", "known-break-wald", "break-date", "estimator-dist")
CV_SOURCES = ("nbb", "bootstrap", "chi2")
DGP_KINDS = ("predictive", "ar1")
MAX_FAILURE_SHARE = 0.01


@dataclass
class ExperimentSpec:
    """One named Monte Carlo experiment.

    ``dgp`` holds ``kind`` (``"predictive"`` or ``"ar1"``) and its parameters:

    * predictive: ``alpha``, ``beta`` (one entry per regime), ``breaks``
      (break fractions), ``c``, ``gamma``, ``sign`` or a fixed root ``phi``,
      ``sigma_u2``, ``sigma_v2``, ``rho``. ``n`` counts raw time points, so a
      cell has ``n - 1`` regression rows.
    * ar1: ``beta1``, ``beta2``, ``tau0``, ``sigma2``; ``n`` observations.

    ``deltas`` turns a cell into a power curve: the last regime's slope is
    the first regime's plus ``delta``. ``bounds`` maps a report metric (or
    ``"method:metric"``) to an inclusive ``[lo, hi]`` range checked on
    every matching cell.
    """

    name: str
    test: str
    dgp: dict[str, Any]
    n_list: list[int]
    reps: int
    methods: list[str] = field(default_factory=lambda: ["ols"])
    cv: str = "nbb"
    seed: int = 0
    level: float = 0.05
    pi0: float = 0.15
    grid_step: float | None = 0.01
    intercept: str = "joint"
    deltas: list[float] | None = None
    k_frac: float = 0.5
    bootstrap_reps: int = 399
    weight_law: str = "rademacher"
    ivx: dict[str, float] = field(default_factory=dict)
    nbb_reps: int = 100_000
    nbb_steps: int = 2000
    bounds: dict[str, list[float]] = field(default_factory=dict)
    acceptance: bool = False
    workers: int = 1
    chunk: int = 250

    def __post_init__(self) -> None:
        if self.test not in TESTS:
            raise ParameterError(f"test: must be one of {TESTS}, got {self.test!r}")
        if self.cv not in CV_SOURCES:
            raise ParameterError(f"cv: must be one of {CV_SOURCES}, got {self.cv!r}")
        if self.dgp.get("kind") not in DGP_KINDS:
            raise ParameterError(f"dgp.kind: must be one of {DGP_KINDS}")
        if self.reps < 100:
            raise ParameterError("reps: must be at least 100")
        if not self.n_list or list(self.n_list) != sorted(self.n_list):
            raise ParameterError("n_list: must be non-empty and ascending")
        for m in self.methods:
            if m not in METHODS:
                raise ParameterError(f"methods: unknown method {m!r}")
        if self.intercept not in INTERCEPT_MODES:
            raise ParameterError(f"intercept: must be one of {INTERCEPT_MODES}")
        if not 0 < self.level < 1:
            raise ParameterError("level: must lie in (0, 1)")
        if self.workers < 1 or self.chunk < 1:
            raise ParameterError("workers and chunk: must be positive")
        TrimSpec(self.pi0, self.grid_step)
        IvxSpec(**self.ivx)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown experiment keys: {sorted(extra)}")
        return cls(**d)

    @property
    def trim(self) -> TrimSpec:
        return TrimSpec(self.pi0, self.grid_step)

    @property
    def ivx_spec(self) -> IvxSpec:
        return IvxSpec(**self.ivx)


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[dict[str, Any]]
    runtime: float
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and all(r["valid"] for r in self.rows)

    def to_csv(self, path=None) -> str:
        return rows_to_csv(self.rows, path)

    def summary(self) -> str:
        lines = [f"experiment {self.spec.name} ({self.spec.test}), {self.runtime:.1f}s"]
        for r in self.rows:
            keys = [k for k in r if k not in ("experiment", "test")]
            lines.append("  " + ", ".join(f"{k}={_fmt(r[k])}" for k in keys))
        for v in self.violations:
            lines.append(f"  BOUND VIOLATED: {v}")
        lines.append("  PASS" if self.passed else "  FAIL")
        return "\n".join(lines)


def rows_to_csv(rows: list[dict[str, Any]], path=None) -> str:
    """One CSV row per report cell; columns are the union in first-seen order."""
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    out = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    out.writeheader()
    for r in rows:
        out.writerow({k: _fmt(v) for k, v in r.items()})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


# ---------------------------------------------------------------- simulation


def _innov(dgp: dict, seed: int) -> InnovationParams:
    return InnovationParams(
        sigma_u2=dgp.get("sigma_u2", 0.25), sigma_v2=dgp.get("sigma_v2", 0.75),
        rho=dgp.get("rho", 0.0), seed=seed,
    )


def _as_list(v, default):
    if v is None:
        return list(default)
    return list(v) if isinstance(v, (list, tuple)) else [v]


def predictive_layout(dgp: dict, n: int, delta: float | None):
    """Break rows and regime specs of a predictive cell."""
    rows = n - 1
    fracs = _as_list(dgp.get("breaks"), [0.5] if delta is not None else [])
    betas = _as_list(dgp.get("beta"), [0.0])
    alphas = _as_list(dgp.get("alpha"), [0.0])
    regimes = len(fracs) + 1
    betas = betas + [betas[-1]] * (regimes - len(betas))
    alphas = alphas + [alphas[-1]] * (regimes - len(alphas))
    if delta is not None:
        betas[-1] = betas[0] + delta
    ks = [int(math.floor(f * rows)) for f in fracs]
    specs = [RegimeSpec(a, b) for a, b in zip(alphas[:regimes], betas[:regimes])]
    return ks, specs


def _persistence(dgp: dict, n: int) -> PersistenceSpec:
    if "phi" in dgp:
        return PersistenceSpec(c=n * (1.0 - float(dgp["phi"])), gamma=1.0)
    return PersistenceSpec(
        c=dgp.get("c", 0.0), gamma=dgp.get("gamma", 1.0),
        sign=dgp.get("sign", "near-stationary"),
    )


def simulate_cell(spec: ExperimentSpec, n: int, delta: float | None, streams: Sequence[int]):
    """Regression arrays ``(y, x, k0)`` for the given replicate streams."""
    dgp = spec.dgp
    if dgp["kind"] == "ar1":
        k0 = int(math.floor(dgp.get("tau0", 0.5) * n))
        b1 = dgp.get("beta1", 0.0)
        b2 = dgp.get("beta2", b1) if delta is None else b1 + delta
        innov = InnovationParams(sigma_u2=dgp.get("sigma2", 1.0), sigma_v2=1.0, seed=spec.seed)
        y = ar1_break_batch(n, b1, b2, k0, innov, streams)
        return y, ar_regressor(y), [k0]
    ks, regimes = predictive_layout(dgp, n, delta)
    config = BreakConfig(n, ks, regimes)
    y, x = predictive_break_batch(config, _persistence(dgp, n), _innov(dgp, spec.seed), streams)
    return y, x, ks


def _truth(spec: ExperimentSpec, n: int, delta: float | None) -> tuple[list[float], float]:
    dgp = spec.dgp
    if dgp["kind"] == "ar1":
        b1 = dgp.get("beta1", 0.0)
        b2 = dgp.get("beta2", b1) if delta is None else b1 + delta
        return [b1, b2], dgp.get("tau0", 0.5)
    ks, regimes = predictive_layout(dgp, n, delta)
    return [r.beta for r in regimes], (ks[0] / (n - 1) if ks else float("nan"))


# ---------------------------------------------------------------- work items


def _chunk_work(spec: ExperimentSpec, n: int, delta: float | None, lo: int, hi: int) -> dict:
    y, x, ks = simulate_cell(spec, n, delta, range(lo, hi))
    rows = y.shape[1]
    trim, ivx = spec.trim, spec.ivx_spec
    z = ivx_instrument(x, ivx) if "ivx" in spec.methods else None
    out: dict[str, np.ndarray] = {}
    for m in spec.methods:
        zm = z if m == "ivx" else None
        if spec.test == "sup-wald":
            if spec.cv == "bootstrap":
                bspec = BootstrapSpec(spec.bootstrap_reps, spec.weight_law, spec.seed)
                res = [
                    wild_bootstrap((y[i], x[i]), bspec, trim, m, spec.intercept, ivx=ivx,
                                   outer=lo + i)
                    for i in range(hi - lo)
                ]
                out[f"{m}:stat"] = np.array([r.statistic for r in res])
                out[f"{m}:pvalue"] = np.array([r.p_value for r in res])
            else:
                s, _ = sup_wald_batch(y, x, m, trim, spec.intercept, ivx=ivx, z=zm)
                out[f"{m}:stat"] = s
        elif spec.test == "known-break-wald":
            k = int(math.floor(spec.k_frac * rows))
            out[f"{m}:stat"] = wald_at_batch(y, x, k, m, spec.intercept, ivx=ivx, z=zm)
        elif spec.test == "break-date":
            b = single_break_batch(y, x, trim, m, spec.intercept != "none", ivx=ivx, z=zm)
            out[f"{m}:k"] = b.k_hat
            out[f"{m}:failed"] = b.failed
        else:
            if ks:
                b = single_break_batch(y, x, trim, m, spec.intercept != "none", ivx=ivx, z=zm)
                out[f"{m}:b1"] = b.coef1[:, -1]
                out[f"{m}:b2"] = b.coef2[:, -1]
                out[f"{m}:failed"] = b.failed
            else:
                out[f"{m}:b1"] = _full_slopes(y, x, zm, spec.intercept != "none")
                out[f"{m}:failed"] = ~np.isfinite(out[f"{m}:b1"])
    return out


def _full_slopes(y, x, z, intercept: bool) -> np.ndarray:
    """Row-wise full-sample OLS (``z=None``) or IVX slopes."""
    inst = x if z is None else z
    if intercept:
        inst = inst - inst.mean(axis=1, keepdims=True)
        num = np.einsum("ij,ij->i", inst, y - y.mean(axis=1, keepdims=True))
        den = np.einsum("ij,ij->i", inst, x - x.mean(axis=1, keepdims=True))
    else:
        num = np.einsum("ij,ij->i", inst, y)
        den = np.einsum("ij,ij->i", inst, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def _run_cells(spec: ExperimentSpec) -> list[tuple[int, float | None, dict]]:
    deltas = spec.deltas if spec.deltas is not None else [None]
    items = [
        (n, d, lo, min(spec.reps, lo + spec.chunk))
        for n in spec.n_list for d in deltas for lo in range(0, spec.reps, spec.chunk)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            futures = [pool.submit(_chunk_work, spec, *it) for it in items]
            parts = [f.result() for f in futures]
    else:
        parts = [_chunk_work(spec, *it) for it in items]
    cells = []
    for n in spec.n_list:
        for d in deltas:
            chunks = [p for it, p in zip(items, parts) if it[0] == n and it[1] == d]
            merged = {k: np.concatenate([c[k] for c in chunks]) for k in chunks[0]}
            cells.append((n, d, merged))
    return cells


# ---------------------------------------------------------------- summaries


def _critical_value(spec: ExperimentSpec) -> float:
    p = restrictions(spec.intercept)
    if spec.cv == "chi2":
        return float(stats.chi2.ppf(1.0 - spec.level, p))
    cvs, _ = critical_values(p, spec.pi0, PathGrid(spec.nbb_steps, spec.nbb_reps, 0))
    level = round(1.0 - spec.level, 10)
    if level not in cvs:
        raise ParameterError(f"level: no tabulated sup-NBB value at {level}")
    return cvs[level]


def _rate(flags: np.ndarray) -> tuple[float, float]:
    p = float(np.mean(flags))
    return p, math.sqrt(p * (1.0 - p) / flags.size)


def _base_row(spec, n, d, m) -> dict[str, Any]:
    return {"experiment": spec.name, "test": spec.test, "method": m, "n": n,
            "delta": "" if d is None else d}


def _finish_row(row: dict, reps: int, failed: int) -> dict:
    row["reps"] = reps
    row["failed"] = failed
    row["valid"] = failed <= MAX_FAILURE_SHARE * reps
    return row


def _test_rows(spec, cells) -> list[dict]:
    cv = None if spec.cv == "bootstrap" else _critical_value(spec)
    rows = []
    for n, d, res in cells:
        for m in spec.methods:
            stat = res[f"{m}:stat"]
            ok = np.isfinite(stat)
            row = _base_row(spec, n, d, m)
            if spec.cv == "bootstrap":
                pv = res[f"{m}:pvalue"][ok]
                reject = pv <= spec.level
                row.update(p_min=float(pv.min()), p_max=float(pv.max()),
                           B=spec.bootstrap_reps, cv_source="bootstrap")
            else:
                reject = stat[ok] > cv
                row.update(critical_value=cv, cv_source=spec.cv)
            rate, se = _rate(reject)
            row.update(reject_rate=rate, reject_se=se,
                       q95=float(np.quantile(stat[ok], 0.95)), mean_stat=float(stat[ok].mean()))
            rows.append(_finish_row(row, spec.reps, int((~ok).sum())))
    return rows


def _break_rows(spec, cells) -> list[dict]:
    rows = []
    for n, d, res in cells:
        _, tau0 = _truth(spec, n, d)
        k0 = int(math.floor(tau0 * (n if spec.dgp["kind"] == "ar1" else n - 1)))
        size = n if spec.dgp["kind"] == "ar1" else n - 1
        for m in spec.methods:
            ok = ~res[f"{m}:failed"]
            dk = (res[f"{m}:k"][ok] - k0).astype(float)
            row = _base_row(spec, n, d, m)
            row.update(k0=k0, mean_abs_dk=float(np.abs(dk).mean()),
                       median_abs_dk=float(np.median(np.abs(dk))),
                       mean_abs_dtau=float(np.abs(dk).mean() / size),
                       sd_n_dtau=float(dk.std(ddof=1)), share_exact=float(np.mean(dk == 0)))
            rows.append(_finish_row(row, spec.reps, int((~ok).sum())))
    return rows


def _estimator_rows(spec, cells) -> list[dict]:
    rows = []
    for n, d, res in cells:
        betas, tau0 = _truth(spec, n, d)
        size = n if spec.dgp["kind"] == "ar1" else n - 1
        for m in spec.methods:
            ok = ~res[f"{m}:failed"]
            row = _base_row(spec, n, d, m)
            keys = [k for k in ("b1", "b2") if f"{m}:{k}" in res]
            for j, key in enumerate(keys):
                est = res[f"{m}:{key}"][ok]
                truth = betas[0] if len(keys) == 1 else betas[j]
                bias = est - truth
                row[f"bias_{j + 1}"] = float(bias.mean())
                row[f"bias_se_{j + 1}"] = float(bias.std(ddof=1) / math.sqrt(bias.size))
                scaled = math.sqrt(size) * bias
                row[f"var_{j + 1}"] = float(scaled.var(ddof=1))
                row[f"skew_{j + 1}"] = float(stats.skew(scaled))
                if len(keys) == 2 and spec.dgp["kind"] == "ar1":
                    frac = tau0 if j == 0 else 1.0 - tau0
                    target = (1.0 - truth**2) / frac
                    row[f"target_var_{j + 1}"] = target
                    row[f"var_rel_err_{j + 1}"] = float(abs(row[f"var_{j + 1}"] / target - 1))
            rows.append(_finish_row(row, spec.reps, int((~ok).sum())))
    return rows


def _paired_rows(spec, cells) -> list[dict]:
    """OLS-minus-IVX differences on common random numbers."""
    rows = []
    if not {"ols", "ivx"} <= set(spec.methods):
        return rows
    cv = None if spec.cv == "bootstrap" else _critical_value(spec)
    for n, d, res in cells:
        row = _base_row(spec, n, d, "ols-ivx")
        if spec.test in ("sup-wald", "known-break-wald"):
            if spec.cv == "bootstrap":
                r_o, r_i = res["ols:pvalue"] <= spec.level, res["ivx:pvalue"] <= spec.level
            else:
                r_o, r_i = res["ols:stat"] > cv, res["ivx:stat"] > cv
            diff = r_o.astype(float) - r_i.astype(float)
            row.update(reject_diff=float(diff.mean()),
                       reject_diff_se=float(diff.std(ddof=1) / math.sqrt(diff.size)))
        elif spec.test == "estimator-dist":
            betas, _ = _truth(spec, n, d)
            ok = ~(res["ols:failed"] | res["ivx:failed"])
            eo, ei = res["ols:b1"][ok] - betas[0], res["ivx:b1"][ok] - betas[0]
            gap = abs(eo.mean()) - abs(ei.mean())
            row.update(abs_bias_gap=float(gap),
                       abs_bias_gap_se=float((eo - ei).std(ddof=1) / math.sqrt(eo.size)))
        else:
            continue
        rows.append(_finish_row(row, spec.reps, 0))
    return rows


def _check_bounds(spec: ExperimentSpec, rows: list[dict]) -> list[str]:
    out = []
    for key, (lo, hi) in spec.bounds.items():
        method, _, metric = key.rpartition(":")
        hits = [r for r in rows if metric in r and (not method or r["method"] == method)]
        if not hits:
            out.append(f"{key}: no cell reports this metric")
        for r in hits:
            v = r[metric]
            if not lo <= v <= hi:
                out.append(f"{key}={v:.6g} outside [{lo}, {hi}] (n={r['n']}, delta={r['delta']})")
    return out


def _report(spec: ExperimentSpec, summarise, paired: bool = False) -> ExperimentReport:
    t0 = time.perf_counter()
    cells = _run_cells(spec)
    rows = summarise(spec, cells)
    if paired:
        rows += _paired_rows(spec, cells)
    return ExperimentReport(spec, rows, time.perf_counter() - t0, _check_bounds(spec, rows))


def run_size_power(spec: ExperimentSpec) -> ExperimentReport:
    """Rejection rates of the sup-Wald or known-break Wald test per cell."""
    if spec.test not in ("sup-wald", "known-break-wald"):
        raise ParameterError("test: run_size_power needs sup-wald or known-break-wald")
    return _report(spec, _test_rows)


def run_breakdate_accuracy(spec: ExperimentSpec) -> ExperimentReport:
    """Distribution of ``k_hat - k0`` per cell."""
    if spec.test != "break-date":
        raise ParameterError("test: run_breakdate_accuracy needs break-date")
    return _report(spec, _break_rows)


def run_estimator_distribution(spec: ExperimentSpec) -> ExperimentReport:
    """Moments of ``sqrt(n) (beta_hat - beta)`` per regime (or full-sample slope bias)."""
    if spec.test != "estimator-dist":
        raise ParameterError("test: run_estimator_distribution needs estimator-dist")
    return _report(spec, _estimator_rows)


def run_ols_vs_ivx_comparison(spec: ExperimentSpec) -> ExperimentReport:
    """Per-method cells plus paired OLS-minus-IVX rows on identical streams."""
    if not {"ols", "ivx"} <= set(spec.methods):
        raise ParameterError("methods: comparison needs both ols and ivx")
    summarise = {"sup-wald": _test_rows, "known-break-wald": _test_rows,
                 "break-date": _break_rows, "estimator-dist": _estimator_rows}[spec.test]
    return _report(spec, summarise, paired=True)


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    if {"ols", "ivx"} <= set(spec.methods):
        return run_ols_vs_ivx_comparison(spec)
    return {
        "sup-wald": run_size_power, "known-break-wald": run_size_power,
        "break-date": run_breakdate_accuracy, "estimator-dist": run_estimator_distribution,
    }[spec.test](spec)


def spec_dict(spec: ExperimentSpec) -> dict[str, Any]:
    return asdict(spec)
