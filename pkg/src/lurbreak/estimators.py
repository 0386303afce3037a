"""Segment estimators: OLS, IVX, kernel long-run variance and the unit-root t statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSegmentError, ParameterError


@dataclass(frozen=True)
class IvxSpec:
    """Instrument root ``R_z = 1 - c_z / n^delta``."""

    c_z: float = 1.0
    delta: float = 0.95

    def __post_init__(self) -> None:
        if not self.c_z > 0:
            raise ParameterError("c_z must be positive")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")

    def rz(self, n: int) -> float:
        return 1.0 - self.c_z / float(n) ** self.delta


@dataclass
class SegmentFit:
    lo: int
    hi: int
    slope: float
    intercept: float | None
    residuals: np.ndarray
    sigma2_hat: float
    degenerate: bool = False

    @property
    def range(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)

    @property
    def coef(self) -> np.ndarray:
        if self.intercept is None:
            return np.array([self.slope])
        return np.array([self.intercept, self.slope])


@dataclass(frozen=True)
class LrvEstimate:
    sigma2: float
    lam: float
    omega: float
    bandwidth: int


def _bounds(n: int, rng: tuple[int, int] | None, with_intercept: bool) -> tuple[int, int]:
    lo, hi = (0, n) if rng is None else (int(rng[0]), int(rng[1]))
    if not 0 <= lo < hi <= n:
        raise ParameterError(f"range [{lo}, {hi}) is outside the data (n={n})")
    need = 3 if with_intercept else 2
    if hi - lo < need:
        raise DegenerateSegmentError(f"segment [{lo}, {hi}) shorter than {need} rows")
    return lo, hi


def _finish(y, basis, lo, hi, slope, intercept, degenerate=False) -> SegmentFit:
    fitted = slope * basis if intercept is None else intercept + slope * basis
    resid = y - fitted
    k = 1 if intercept is None else 2
    sigma2 = float(resid @ resid) / max(hi - lo - k, 1)
    return SegmentFit(lo, hi, float(slope), intercept, resid, sigma2, degenerate)


def ols_segment(
    y: np.ndarray,
    x: np.ndarray,
    range: tuple[int, int] | None = None,
    with_intercept: bool = False,
) -> SegmentFit:
    """Least-squares fit of ``y`` on ``x`` (optionally with a constant) over ``[lo, hi)``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    lo, hi = _bounds(y.shape[0], range, with_intercept)
    ys, xs = y[lo:hi], x[lo:hi]
    if with_intercept:
        xc = xs - xs.mean()
        sxx = xc @ xc
        if not sxx > 0:
            raise DegenerateSegmentError(f"regressor is constant on [{lo}, {hi})")
        slope = (xc @ (ys - ys.mean())) / sxx
        return _finish(ys, xs, lo, hi, slope, float(ys.mean() - slope * xs.mean()))
    sxx = xs @ xs
    if not sxx > 0:
        raise DegenerateSegmentError(f"regressor is identically zero on [{lo}, {hi})")
    return _finish(ys, xs, lo, hi, (xs @ ys) / sxx, None)


def ivx_filter(x: np.ndarray, spec: IvxSpec = IvxSpec()) -> np.ndarray:
    """Mildly integrated filter of the regressor differences.

    ``z[0] = dx[0]``, ``z[t] = R_z z[t-1] + dx[t]`` with ``dx = diff(x)`` and
    ``R_z = 1 - c_z / len(x)^delta``; the result has ``len(x) - 1`` entries.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise ParameterError("need at least two observations")
    rz = spec.rz(n)
    dx = np.diff(x, axis=-1)
    z = np.empty_like(dx)
    z[..., 0] = dx[..., 0]
    for t in np.arange(1, dx.shape[-1]):
        z[..., t] = rz * z[..., t - 1] + dx[..., t]
    return z


def ivx_instrument(x: np.ndarray, spec: IvxSpec = IvxSpec()) -> np.ndarray:
    """Instrument aligned with the regressor rows: ``Z = (0, z_1, ..., z_{n-1})``."""
    x = np.asarray(x, dtype=float)
    z = ivx_filter(x, spec)
    out = np.zeros_like(x)
    out[..., 1:] = z
    return out


def ivx_segment(
    y: np.ndarray,
    x: np.ndarray,
    z: np.ndarray,
    range: tuple[int, int] | None = None,
    with_intercept: bool = False,
    form: str = "iv",
    residuals: str = "regressor",
) -> SegmentFit:
    """IVX slope on ``[lo, hi)``.

    ``form="iv"`` is the instrumental-variable estimator ``(z'x)^-1 z'y``
    (regressors ``[1, x]`` instrumented by ``[1, z]`` with an intercept);
    ``form="self"`` is the self-normalised ``z'y / z'z``. ``residuals``
    chooses the basis the residuals are measured against: ``"regressor"``
    (``x``) or ``"instrument"`` (``z``).
    """
    if form not in ("iv", "self"):
        raise ParameterError(f"unknown IVX form {form!r}")
    if residuals not in ("regressor", "instrument"):
        raise ParameterError(f"unknown residual basis {residuals!r}")
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    lo, hi = _bounds(y.shape[0], range, with_intercept)
    ys, xs, zs = y[lo:hi], x[lo:hi], z[lo:hi]
    target = zs if form == "self" else xs
    basis = xs if residuals == "regressor" else zs
    degenerate = False
    if with_intercept:
        zc = zs - zs.mean()
        den = zc @ (target - target.mean())
        if den != 0:
            slope = (zc @ (ys - ys.mean())) / den
            intercept = float(ys.mean() - slope * target.mean())
        else:
            degenerate = True
            a = np.array([[hi - lo, target.sum()], [zs.sum(), zs @ target]])
            b = np.array([ys.sum(), zs @ ys])
            intercept, slope = np.linalg.pinv(a, rcond=1e-12) @ b
            intercept = float(intercept)
        return _finish(ys, basis, lo, hi, slope, intercept, degenerate)
    den = zs @ target
    if den != 0:
        slope = (zs @ ys) / den
    else:
        degenerate, slope = True, 0.0
    return _finish(ys, basis, lo, hi, slope, None, degenerate)


def default_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def lrv(
    residuals: np.ndarray, bandwidth: int | None = None, kernel: str = "bartlett"
) -> LrvEstimate:
    """Kernel long-run variance ``Sigma + Lambda + Lambda'`` of a residual series.

    Bartlett weights ``1 - j/(M+1)`` for lags ``j = 1..M``; ``M = 0`` returns
    the second moment.
    """
    if kernel != "bartlett":
        raise ParameterError("only the Bartlett kernel is supported")
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0]
    m = default_bandwidth(n) if bandwidth is None else int(bandwidth)
    if not 0 <= m < n:
        raise ParameterError(f"bandwidth must lie in [0, {n})")
    sigma2 = float(e @ e) / n
    lam = 0.0
    for j in range(1, m + 1):
        lam += (1.0 - j / (m + 1.0)) * float(e[j:] @ e[:-j]) / n
    return LrvEstimate(sigma2, lam, sigma2 + 2.0 * lam, m)


def df_t_statistic(y: np.ndarray, studentize: bool = False) -> float:
    """``sqrt(sum y_{t-1}^2) * (beta_hat - 1)`` from the no-intercept AR(1) fit, ``y_0 = 0``.

    This is the Dickey-Fuller t ratio for unit-variance errors; ``studentize``
    divides by the residual standard deviation instead.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 10:
        raise ParameterError("need at least 10 observations")
    y_lag = np.concatenate([[0.0], y[:-1]])
    syy = y_lag @ y_lag
    if not syy > 0:
        raise DegenerateSegmentError("series is identically zero")
    beta = (y @ y_lag) / syy
    t = math.sqrt(syy) * (beta - 1.0)
    if studentize:
        e = y - beta * y_lag
        t /= math.sqrt(float(e @ e) / (y.shape[0] - 1))
    return float(t)


def df_t_statistic_batch(y: np.ndarray) -> np.ndarray:
    """Row-wise :func:`df_t_statistic` for an ``(R, n)`` array."""
    y = np.asarray(y, dtype=float)
    y_lag = np.zeros_like(y)
    y_lag[:, 1:] = y[:, :-1]
    syy = np.einsum("ij,ij->i", y_lag, y_lag)
    beta = np.einsum("ij,ij->i", y, y_lag) / syy
    return np.sqrt(syy) * (beta - 1.0)
