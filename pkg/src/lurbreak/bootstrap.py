"""Fixed-regressor wild bootstrap for the sup-Wald statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._rng import make_rng
from .breakpoint import DataLike, TrimSpec, as_design
from .estimators import IvxSpec, ivx_instrument, ols_segment
from .exceptions import ParameterError
from .limits import LEVELS
from .wald import sup_wald_batch

WEIGHT_LAWS = ("rademacher", "normal")


@dataclass(frozen=True)
class BootstrapSpec:
    reps: int = 399
    weight_law: str = "rademacher"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reps < 100:
            raise ParameterError("bootstrap reps must be at least 100")
        if self.weight_law not in WEIGHT_LAWS:
            raise ParameterError(f"weight_law must be one of {WEIGHT_LAWS}")


@dataclass
class BootstrapResult:
    statistic: float
    p_value: float
    critical_values: dict[float, float]
    draws: np.ndarray
    spec: BootstrapSpec
    warning: str | None = None

    def reject(self, level: float) -> bool:
        return self.p_value <= level


def draw_weights(spec: BootstrapSpec, n: int, outer: int, b: int) -> np.ndarray:
    """Mean-zero, unit-variance weights for replicate ``b`` of outer sample ``outer``."""
    rng = make_rng(spec.seed, outer, b)
    if spec.weight_law == "rademacher":
        return rng.integers(0, 2, size=n) * 2.0 - 1.0
    return rng.standard_normal(n)


def bootstrap_p_value(statistic: float, draws: np.ndarray) -> float:
    """``(1 + #{S* >= S}) / (B + 1)``."""
    draws = np.asarray(draws)
    return float((1 + np.count_nonzero(draws >= statistic)) / (draws.size + 1))


def null_residuals(y: np.ndarray, x: np.ndarray, intercept: bool) -> tuple[np.ndarray, np.ndarray]:
    """Fitted values and centred residuals of the full-sample no-break OLS fit."""
    fit = ols_segment(y, x, None, intercept)
    fitted = y - fit.residuals
    return fitted, fit.residuals - fit.residuals.mean()


def wild_bootstrap(
    data: DataLike,
    spec: BootstrapSpec = BootstrapSpec(),
    trim: TrimSpec = TrimSpec(),
    method: str = "ols",
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    outer: int = 0,
) -> BootstrapResult:
    """Bootstrap distribution of the sup-Wald statistic under no break.

    Residuals of the no-break fit are centred, multiplied by i.i.d. weights
    and added back to the fitted values; the regressor path is held fixed.
    Replicate ``b`` draws its weights from stream ``(seed, outer, b)``.
    """
    y, x = as_design(data)
    n = y.shape[0]
    z = ivx_instrument(x, ivx) if method == "ivx" else None
    stat, _ = sup_wald_batch(y[None], x[None], method, trim, intercept, ivx=ivx,
                             z=None if z is None else z[None])
    stat = float(stat[0])
    fitted, resid = null_residuals(y, x, intercept != "none")
    if not np.any(np.abs(resid) > 1e-12 * max(1.0, float(np.abs(y).max()))):
        msg = "residuals are numerically zero; bootstrap is uninformative"
        warnings.warn(msg, RuntimeWarning)
        return BootstrapResult(stat, 1.0, {lv: np.nan for lv in LEVELS}, np.empty(0), spec, msg)
    w = np.stack([draw_weights(spec, n, outer, b) for b in range(spec.reps)])
    y_star = fitted + resid * w
    xs = np.broadcast_to(x, y_star.shape)
    zs = None if z is None else np.broadcast_to(z, y_star.shape)
    draws, _ = sup_wald_batch(y_star, xs, method, trim, intercept, ivx=ivx, z=zs)
    cvs = {float(lv): float(q) for lv, q in zip(LEVELS, np.quantile(draws, LEVELS))}
    return BootstrapResult(stat, bootstrap_p_value(stat, draws), cvs, draws, spec)
