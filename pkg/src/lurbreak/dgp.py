"""Synthetic data generating processes.

Conventions shared by every predictive-regression simulator (they follow the
reference R simulation code):

* ``n`` raw time points are simulated; the regressor starts at ``x_0 = 0``
  and ``x_t = rho_t * x_{t-1} + v_t`` for ``t = 1, ..., n-1``.
* The returned :class:`Dataset` holds the ``n - 1`` regression rows
  ``y_t = alpha + beta * x_{t-1} + u_t``; ``Dataset.x`` is the lagged
  regressor that multiplies the slope in each row.
* Break indices count regression rows: rows ``1..k`` belong to the first
  regime.

Autoregressive simulators return ``n`` observations ``y_1..y_n`` with
``y_0 = 0`` and no ``x`` column.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.signal import lfilter

from ._rng import make_rng, rng_tag
from .exceptions import ParameterError

SIGNS = ("near-stationary", "explosive")


@dataclass(frozen=True)
class InnovationParams:
    """Bivariate normal innovations ``(u_t, v_t)``.

    ``u`` drives the regressand, ``v`` the regressor. Defaults are the
    variances used in the reference simulation code.
    """

    sigma_u2: float = 0.25
    sigma_v2: float = 0.75
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.sigma_u2 > 0 and self.sigma_v2 > 0):
            raise ParameterError("sigma_u2 and sigma_v2 must be positive")
        if not abs(self.rho) <= 1:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError("seed must be a non-negative integer")

    @property
    def cov(self) -> np.ndarray:
        s_uv = self.rho * math.sqrt(self.sigma_u2) * math.sqrt(self.sigma_v2)
        return np.array([[self.sigma_u2, s_uv], [s_uv, self.sigma_v2]])

    def cholesky(self) -> np.ndarray:
        # closed form so that |rho| = 1 (singular but PSD) is still valid
        su, sv = math.sqrt(self.sigma_u2), math.sqrt(self.sigma_v2)
        return np.array(
            [[su, 0.0], [self.rho * sv, math.sqrt(max(0.0, 1.0 - self.rho**2)) * sv]]
        )


@dataclass(frozen=True)
class PersistenceSpec:
    """Autoregressive root ``1 - c/n^gamma`` (or ``1 + c/n^gamma`` if explosive)."""

    c: float = 0.0
    gamma: float = 1.0
    sign: str = "near-stationary"

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.sign not in SIGNS:
            raise ParameterError(f"sign must be one of {SIGNS}, got {self.sign!r}")

    def root(self, n: int) -> float:
        step = self.c / float(n) ** self.gamma
        if self.sign == "explosive":
            return 1.0 + step
        r = 1.0 - step
        if self.gamma == 1 and r <= -1:
            raise ParameterError(f"1 - c/n = {r} must exceed -1 (c={self.c}, n={n})")
        return r


@dataclass(frozen=True)
class RegimeSpec:
    alpha: float = 0.0
    beta: float = 0.0
    persistence: PersistenceSpec | None = None
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.sigma is not None and not self.sigma > 0:
            raise ParameterError("regime sigma must be positive")


@dataclass(frozen=True)
class BreakConfig:
    n: int
    breaks: tuple[int, ...]
    regimes: tuple[RegimeSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "breaks", tuple(int(k) for k in self.breaks))
        object.__setattr__(self, "regimes", tuple(self.regimes))
        if len(self.regimes) != len(self.breaks) + 1:
            raise ParameterError(
                f"need {len(self.breaks) + 1} regimes for {len(self.breaks)} breaks, "
                f"got {len(self.regimes)}"
            )
        if any(b <= a for a, b in zip(self.breaks, self.breaks[1:])):
            raise ParameterError("break indices must be strictly increasing")
        if any(not 1 <= k < self.n for k in self.breaks):
            raise ParameterError(f"break indices must lie in [1, {self.n})")


@dataclass
class Dataset:
    """Regression rows ``(y_t, x_{t-1})``; ``x`` is ``None`` for pure AR data."""

    y: np.ndarray
    x: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 1:
            raise ParameterError("y must be one-dimensional")
        if not np.all(np.isfinite(self.y)):
            raise ParameterError("y contains non-finite values")
        if self.x is not None:
            self.x = np.asarray(self.x, dtype=float)
            if self.x.shape != self.y.shape:
                raise ParameterError(
                    f"x and y lengths differ ({self.x.shape[0]} vs {self.y.shape[0]})"
                )
            if not np.all(np.isfinite(self.x)):
                raise ParameterError("x contains non-finite values")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def is_ar(self) -> bool:
        return self.x is None

    def design(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(y, regressor)``; AR data uses ``y_{t-1}`` with ``y_0 = 0``."""
        if self.x is None:
            return self.y, ar_regressor(self.y)
        return self.y, self.x

    def reversed(self) -> "Dataset":
        if self.x is None:
            raise ParameterError("time reversal is only defined for regression rows")
        return Dataset(self.y[::-1].copy(), self.x[::-1].copy(), dict(self.meta))


def ar_regressor(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    r = np.zeros_like(y)
    r[..., 1:] = y[..., :-1]
    return r


def _meta(kind: str, **params: Any) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": kind, "rng": rng_tag()}
    for key, val in params.items():
        if hasattr(val, "__dataclass_fields__"):
            val = asdict(val)
        elif isinstance(val, tuple):
            val = [asdict(v) if hasattr(v, "__dataclass_fields__") else v for v in val]
        out[key] = val
    return out


# --------------------------------------------------------------------------
# innovations and regressors


def simulate_innovations(
    n: int, params: InnovationParams, stream: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` pairs ``(u_t, v_t)`` from the bivariate normal in ``params``."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    e = make_rng(params.seed, stream).standard_normal((n, 2))
    uv = e @ params.cholesky().T
    return uv[:, 0].copy(), uv[:, 1].copy()


def innovations_batch(
    n: int, params: InnovationParams, streams: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Stack :func:`simulate_innovations` over replicate streams, shape ``(R, n)``."""
    u = np.empty((len(streams), n))
    v = np.empty((len(streams), n))
    for i, s in enumerate(streams):
        u[i], v[i] = simulate_innovations(n, params, stream=s)
    return u, v


def simulate_lur_regressor(n: int, spec: PersistenceSpec, v: np.ndarray) -> np.ndarray:
    """``x_t = rho_n x_{t-1} + v_t`` started from ``x_0 = 0`` (so ``x[0] = v[0]``)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != n:
        raise ParameterError(f"v has length {v.shape[-1]}, expected {n}")
    return lfilter([1.0], [1.0, -spec.root(n)], v, axis=-1)


def _regressor_path(v: np.ndarray, rho_t: np.ndarray | float) -> np.ndarray:
    """Regressor levels ``x_0 = 0, x_t = rho_t x_{t-1} + v_t``; ``v[..., 0]`` is unused."""
    vv = np.array(v, dtype=float, copy=True)
    vv[..., 0] = 0.0
    if np.ndim(rho_t) == 0:
        return lfilter([1.0], [1.0, -float(rho_t)], vv, axis=-1)
    x = np.zeros_like(vv)
    for t in range(1, vv.shape[-1]):
        x[..., t] = rho_t[t] * x[..., t - 1] + vv[..., t]
    return x


def _regime_index(n_rows: int, breaks: Sequence[int]) -> np.ndarray:
    rows = np.arange(1, n_rows + 1)
    return np.searchsorted(np.asarray(breaks, dtype=int), rows, side="left")


def _predictive_rows(
    u: np.ndarray,
    x: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    sigma: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    x_lag = x[..., :-1]
    noise = u[..., 1:] if sigma is None else sigma * u[..., 1:]
    return alpha + beta * x_lag + noise, x_lag


# --------------------------------------------------------------------------
# predictive regressions


def simulate_predictive_null(
    n: int,
    beta0: float = 0.0,
    beta1: float = 0.0,
    c1: float = 0.0,
    rho: float = 0.0,
    seed: int = 0,
    *,
    gamma: float = 1.0,
    sigma_u2: float = 0.25,
    sigma_v2: float = 0.75,
    noiseless: bool = False,
    stream: int = 0,
) -> Dataset:
    """Single-regime predictive regression with a local-to-unity regressor.

    Mirrors the reference null simulator: ``n`` innovation pairs, root
    ``1 - c1/n^gamma``, and ``n - 1`` rows ``y_t = beta0 + beta1 x_{t-1} + u_t``.
    ``noiseless`` zeroes ``u`` (diagnostic use only).
    """
    if n < 10:
        raise ParameterError("n must be at least 10")
    innov = InnovationParams(sigma_u2, sigma_v2, rho, seed)
    pers = PersistenceSpec(c1, gamma)
    u, v = simulate_innovations(n, innov, stream)
    if noiseless:
        u = np.zeros_like(u)
    x = _regressor_path(v, pers.root(n))
    y, x_lag = _predictive_rows(u, x, beta0, beta1, None)
    meta = _meta(
        "predictive_null", n=n, beta0=beta0, beta1=beta1, persistence=pers,
        innov=innov, stream=stream, noiseless=noiseless,
    )
    return Dataset(y, x_lag, meta)


def _regime_arrays(config: BreakConfig, n_rows: int):
    idx = _regime_index(n_rows, config.breaks)
    alpha = np.array([r.alpha for r in config.regimes])[idx]
    beta = np.array([r.beta for r in config.regimes])[idx]
    sig = None
    if any(r.sigma is not None for r in config.regimes):
        sig = np.array([1.0 if r.sigma is None else r.sigma for r in config.regimes])[idx]
    return idx, alpha, beta, sig


def _rho_path(config: BreakConfig, persistence: PersistenceSpec, idx: np.ndarray):
    n = config.n
    if all(r.persistence is None for r in config.regimes):
        return persistence.root(n)
    roots = np.array([(r.persistence or persistence).root(n) for r in config.regimes])
    rho_t = np.empty(n)
    rho_t[0] = np.nan  # x_0 is fixed
    rho_t[1:] = roots[idx]
    return rho_t


def predictive_break_batch(
    config: BreakConfig,
    persistence: PersistenceSpec,
    innov: InnovationParams,
    streams: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(y, x)`` of shape ``(R, n-1)``; row ``r`` equals stream ``streams[r]``."""
    u, v = innovations_batch(config.n, innov, streams)
    return _predictive_from_uv(config, persistence, u, v, None)


def simulate_predictive_break(
    config: BreakConfig,
    persistence: PersistenceSpec,
    innov: InnovationParams,
    *,
    noiseless: bool = False,
    stream: int = 0,
) -> Dataset:
    """Piecewise predictive regression ``y_t = alpha_j + beta_j x_{t-1} + u_t``.

    The regressor path is shared across regimes unless a regime carries its
    own :class:`PersistenceSpec`. With all slopes zero this is a pure
    change-in-mean model.
    """
    y, x = _simulate_predictive(config, persistence, innov, None, noiseless, stream)
    meta = _meta(
        "predictive_break", config=config, persistence=persistence, innov=innov,
        stream=stream, noiseless=noiseless,
    )
    return Dataset(y, x, meta)


def _predictive_from_uv(config, persistence, u, v, sigma_rows):
    n_rows = config.n - 1
    if config.breaks and config.breaks[-1] >= n_rows:
        raise ParameterError(f"last break must be below the {n_rows} regression rows")
    idx, alpha, beta, sig = _regime_arrays(config, n_rows)
    if sigma_rows is not None:
        sig = sigma_rows if sig is None else sig * sigma_rows
    x = _regressor_path(v, _rho_path(config, persistence, idx))
    return _predictive_rows(u, x, alpha, beta, sig)


def _simulate_predictive(config, persistence, innov, sigma_rows, noiseless, stream):
    u, v = simulate_innovations(config.n, innov, stream)
    if noiseless:
        u = np.zeros_like(u)
    return _predictive_from_uv(config, persistence, u, v, sigma_rows)


def simulate_mean_variance_break(
    n: int,
    beta_regimes: Sequence[float],
    k1: int,
    sigma1: float,
    sigma2: float,
    k2: int,
    persistence: PersistenceSpec,
    innov: InnovationParams | None = None,
    *,
    alpha_regimes: Sequence[float] | None = None,
    stream: int = 0,
) -> Dataset:
    """Slope break at row ``k1`` and an innovation-scale break at row ``k2``.

    ``u_t = sigma_t * u0_t`` with ``sigma_t = sigma1`` for rows ``<= k2``.
    """
    if not (sigma1 > 0 and sigma2 > 0):
        raise ParameterError("sigma1 and sigma2 must be positive")
    innov = innov or InnovationParams()
    alphas = alpha_regimes if alpha_regimes is not None else (0.0,) * len(beta_regimes)
    if len(beta_regimes) != 2 or len(alphas) != 2:
        raise ParameterError("expected two coefficient regimes")
    config = BreakConfig(
        n, (k1,), tuple(RegimeSpec(a, b) for a, b in zip(alphas, beta_regimes))
    )
    n_rows = n - 1
    if not 1 <= k2 < n_rows:
        raise ParameterError(f"variance break k2 must lie in [1, {n_rows})")
    sigma_rows = np.where(np.arange(1, n_rows + 1) <= k2, float(sigma1), float(sigma2))
    y, x = _simulate_predictive(config, persistence, innov, sigma_rows, False, stream)
    meta = _meta(
        "mean_variance_break", config=config, persistence=persistence, innov=innov,
        k2=k2, sigma1=sigma1, sigma2=sigma2, stream=stream,
    )
    return Dataset(y, x, meta)


def simulate_three_regime(
    n: int,
    betas: Sequence[float],
    cs: Sequence[float],
    k1: int,
    k2: int,
    innov: InnovationParams,
    *,
    exponents: Sequence[float] = (1.0, 1.0, 1.0),
    signs: Sequence[str] = ("near-stationary", "explosive", "near-stationary"),
    noiseless: bool = False,
    stream: int = 0,
) -> Dataset:
    """Three regimes in both the slope and the regressor's autoregressive root.

    Default roots are ``1 - c1/n``, ``1 + c2/n`` (explosive middle regime) and
    ``1 - c3/n``.
    """
    if not 1 < k1 < k2 < n - 1:
        raise ParameterError("need 1 < k1 < k2 < n - 1")
    if len(betas) != 3 or len(cs) != 3 or len(exponents) != 3 or len(signs) != 3:
        raise ParameterError("betas, cs, exponents and signs need three entries")
    if any(c < 0 for c in cs):
        raise ParameterError("persistence coefficients must be non-negative")
    regimes = tuple(
        RegimeSpec(0.0, b, PersistenceSpec(c, g, s))
        for b, c, g, s in zip(betas, cs, exponents, signs)
    )
    config = BreakConfig(n, (k1, k2), regimes)
    y, x = _simulate_predictive(config, PersistenceSpec(), innov, None, noiseless, stream)
    meta = _meta("three_regime", config=config, innov=innov, stream=stream, noiseless=noiseless)
    return Dataset(y, x, meta)


# --------------------------------------------------------------------------
# autoregressions


def _ar_path(e: np.ndarray, beta1: float, beta2: float, k0: int) -> np.ndarray:
    y1 = lfilter([1.0], [1.0, -beta1], e[..., :k0], axis=-1)
    zi = beta2 * y1[..., -1:]
    y2, _ = lfilter([1.0], [1.0, -beta2], e[..., k0:], axis=-1, zi=zi)
    return np.concatenate([y1, y2], axis=-1)


def _ar_errors(
    n: int, k0: int, innov: InnovationParams, stream: int,
    drift: tuple[float, float] | None, errors: np.ndarray | None,
) -> np.ndarray:
    if errors is not None:
        e = np.asarray(errors, dtype=float)
        if e.shape[-1] != n:
            raise ParameterError(f"errors have length {e.shape[-1]}, expected {n}")
        e = e.copy()
    else:
        e, _ = simulate_innovations(n, innov, stream)
    if drift is not None:
        c, eta = drift
        if not eta > 0.5:
            raise ParameterError("drift exponent eta must exceed 1/2")
        e[..., :k0] += c * float(n) ** (-eta)
    return e


def simulate_ar1_break(
    n: int,
    beta1: float,
    beta2: float | PersistenceSpec,
    k0: int,
    innov: InnovationParams | None = None,
    drift: tuple[float, float] | None = None,
    *,
    errors: np.ndarray | None = None,
    stationary: bool = False,
    stream: int = 0,
) -> Dataset:
    """``y_t = beta1 y_{t-1} 1{t <= k0} + beta2 y_{t-1} 1{t > k0} + e_t``, ``y_0 = 0``.

    ``beta2`` may be a :class:`PersistenceSpec` (e.g. ``1 - c/n`` or the mildly
    explosive ``1 + c/n^alpha``). ``drift=(c, eta)`` adds ``c n^-eta`` to the
    errors of the first regime only. ``innov.sigma_u2`` is the error variance;
    ``errors`` overrides the Gaussian draw (e.g. linear-process errors).
    """
    if not 1 < k0 < n:
        raise ParameterError(f"k0 must lie in (1, {n})")
    innov = innov or InnovationParams(sigma_u2=1.0, sigma_v2=1.0)
    b2 = beta2.root(n) if isinstance(beta2, PersistenceSpec) else float(beta2)
    if stationary and not (abs(beta1) < 1 and abs(b2) < 1):
        raise ParameterError("stationary regimes require |beta1|, |beta2| < 1")
    e = _ar_errors(n, k0, innov, stream, drift, errors)
    y = _ar_path(e, float(beta1), b2, k0)
    meta = _meta(
        "ar1_break", n=n, beta1=beta1, beta2=b2, k0=k0, innov=innov,
        drift=list(drift) if drift else None, stream=stream,
        external_errors=errors is not None,
    )
    return Dataset(y, None, meta)


def ar1_break_batch(
    n: int,
    beta1: float,
    beta2: float,
    k0: int,
    innov: InnovationParams,
    streams: Sequence[int],
) -> np.ndarray:
    """AR(1) break paths, shape ``(R, n)``; row ``r`` equals stream ``streams[r]``."""
    u, _ = innovations_batch(n, innov, streams)
    return _ar_path(u, float(beta1), float(beta2), k0)


def simulate_linear_process_errors(
    n: int,
    coeffs: Sequence[float],
    sigma_e2: float = 1.0,
    seed: int = 0,
    *,
    stream: int = 0,
) -> np.ndarray:
    """MA(J) errors ``e_t = sum_j a_j w_{t-j}`` with i.i.d. ``N(0, sigma_e2)`` shocks."""
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ParameterError("coeffs must be a non-empty vector")
    if abs(a.sum()) < 1e-12:
        raise ParameterError("sum of linear-process coefficients a(1) must be non-zero")
    if not sigma_e2 > 0:
        raise ParameterError("sigma_e2 must be positive")
    w = math.sqrt(sigma_e2) * make_rng(seed, stream).standard_normal(n + a.size - 1)
    return np.convolve(w, a, mode="valid")
