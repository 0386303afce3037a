"""Simulated limit laws: Brownian and Ornstein-Uhlenbeck functionals, sup-NBB critical values."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from ._rng import make_rng, rng_tag
from .exceptions import ParameterError

LEVELS = (0.90, 0.95, 0.99)
CACHE_ENV = "LURBREAK_CACHE"
CACHE_VERSION = 1
# pi0 standing in for a single-point trim at s = 1/2
SINGLETON_PI0 = 0.4999

# -zeta(1/2) / sqrt(2 pi): shift of a discretely monitored diffusion maximum
_BGK = 0.5826
# paths simulated per block, bounds memory at about steps * 8 * _CHUNK bytes
_CHUNK = 2000


@dataclass(frozen=True)
class PathGrid:
    steps: int = 2000
    reps: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 100:
            raise ParameterError("steps must be at least 100")
        if self.reps < 1:
            raise ParameterError("reps must be positive")


@dataclass
class LimitSample:
    draws: np.ndarray
    quantiles: dict[float, float] = field(default_factory=dict)

    @classmethod
    def from_draws(cls, draws: np.ndarray, levels=LEVELS) -> "LimitSample":
        draws = np.asarray(draws, dtype=float)
        qs = np.quantile(draws, levels)
        return cls(draws, {float(lv): float(q) for lv, q in zip(levels, qs)})


def _chunks(reps: int):
    for start in range(0, reps, _CHUNK):
        yield start, min(reps, start + _CHUNK)


def brownian_increments(grid: PathGrid, block: int, size: int, dim: int = 1) -> np.ndarray:
    """Standard normal increments scaled by ``1/sqrt(steps)``, shape ``(size, dim, steps)``.

    Block ``b`` is generated from its own counter stream, so results do not
    depend on how many blocks are drawn.
    """
    rng = make_rng(grid.seed, 1, block)
    return rng.standard_normal((size, dim, grid.steps)) / np.sqrt(grid.steps)


def simulate_brownian(grid: PathGrid) -> np.ndarray:
    """Brownian paths on ``i/steps``, ``i = 0..steps``; shape ``(reps, steps + 1)``."""
    out = np.zeros((grid.reps, grid.steps + 1))
    for b, (lo, hi) in enumerate(_chunks(grid.reps)):
        out[lo:hi, 1:] = np.cumsum(brownian_increments(grid, b, hi - lo)[:, 0], axis=-1)
    return out


def _ou(dw: np.ndarray, c: float, steps: int) -> np.ndarray:
    """Euler scheme ``J_i = (1 + c/steps) J_{i-1} + dW_i`` with ``J_0 = 0``."""
    if c == 0:
        return np.cumsum(dw, axis=-1)
    return lfilter([1.0], [1.0, -(1.0 + c / steps)], dw, axis=-1)


def simulate_ou_path(c: float, grid: PathGrid, sigma: float = 1.0) -> np.ndarray:
    """OU paths ``dJ = c J dt + sigma dW`` on ``[0, 1]``; shape ``(reps, steps + 1)``.

    With ``c = 0`` the output equals :func:`simulate_brownian` (times ``sigma``).
    """
    out = np.zeros((grid.reps, grid.steps + 1))
    for b, (lo, hi) in enumerate(_chunks(grid.reps)):
        dw = brownian_increments(grid, b, hi - lo)[:, 0]
        out[lo:hi, 1:] = sigma * _ou(dw, c, grid.steps)
    return out


def joint_lur_functionals(
    c: float, grid: PathGrid, rho: float = 0.0, r: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Draws of ``(int_0^r J_c dB_u, int_0^r J_c^2)``.

    ``J_c`` is driven by ``W_v`` and ``B_u = rho W_v + sqrt(1 - rho^2) W_perp``;
    the stochastic integral uses left-point (Ito) sums.
    """
    if not -1 <= rho <= 1:
        raise ParameterError("rho must lie in [-1, 1]")
    if not 0 < r <= 1:
        raise ParameterError("r must lie in (0, 1]")
    m = max(1, int(round(r * grid.steps)))
    stoch = np.empty(grid.reps)
    quad = np.empty(grid.reps)
    for b, (lo, hi) in enumerate(_chunks(grid.reps)):
        inc = brownian_increments(grid, b, hi - lo, dim=2)[..., :m]
        dv, dperp = inc[:, 0], inc[:, 1]
        du = rho * dv + np.sqrt(1.0 - rho**2) * dperp
        j = _ou(dv, c, grid.steps)
        j_left = np.concatenate([np.zeros((hi - lo, 1)), j[:, :-1]], axis=-1)
        stoch[lo:hi] = np.sum(j_left * du, axis=-1)
        quad[lo:hi] = np.sum(j_left**2, axis=-1) / grid.steps
    return stoch, quad


def nbb_sup_quantiles(
    pi0: float, p: int, grid: PathGrid, levels=LEVELS, *, scheme: str = "ou"
) -> LimitSample:
    """``sup_{s in [pi0, 1-pi0]} sum_i BB_i(s)^2 / (s(1-s))`` over ``p`` independent bridges.

    ``scheme="ou"`` (default) uses the exact representation
    ``BB(s) / sqrt(s(1-s)) = X(log(s/(1-s)) / 2)`` with ``X`` a stationary
    Ornstein-Uhlenbeck process, sampled exactly on ``steps`` equally spaced
    points, and adds the continuity correction ``0.5826 sqrt(2 du)`` to the
    discrete maximum of ``|X|`` (the discrete maximum is biased down by
    ``O(sqrt(du))``). ``scheme="bridge"`` evaluates Brownian bridges on
    ``s = i/steps`` with no correction.
    """
    if not 0 < pi0 < 0.5:
        raise ParameterError("pi0 must lie in (0, 0.5)")
    if p < 1:
        raise ParameterError("p must be a positive integer")
    if scheme not in ("ou", "bridge"):
        raise ParameterError(f"unknown scheme {scheme!r}")
    draws = np.empty(grid.reps)
    if scheme == "ou":
        du = np.log((1.0 - pi0) / pi0) / (grid.steps - 1)
        a = np.exp(-du)
        for b, (lo, hi) in enumerate(_chunks(grid.reps)):
            xi = make_rng(grid.seed, 2, b).standard_normal((hi - lo, p, grid.steps))
            e = xi * np.sqrt(1.0 - a * a)
            e[..., 0] = xi[..., 0]
            x = lfilter([1.0], [1.0, -a], e, axis=-1)
            radius = np.sqrt(np.max(np.sum(x * x, axis=1), axis=-1))
            draws[lo:hi] = (radius + _BGK * np.sqrt(2.0 * du)) ** 2
        return LimitSample.from_draws(draws, levels)
    s = np.arange(1, grid.steps) / grid.steps
    keep = (s >= pi0 - 1e-12) & (s <= 1 - pi0 + 1e-12)
    if not keep.any():
        keep = np.abs(s - 0.5) == np.abs(s - 0.5).min()
    idx = np.nonzero(keep)[0]
    sk = s[idx]
    for b, (lo, hi) in enumerate(_chunks(grid.reps)):
        w = np.cumsum(brownian_increments(grid, b, hi - lo, dim=p), axis=-1)
        bb = w[..., idx] - sk * w[..., -1:]
        draws[lo:hi] = np.max(np.sum(bb**2, axis=1) / (sk * (1 - sk)), axis=-1)
    return LimitSample.from_draws(draws, levels)


def theorem1_beta2_limit(
    c: float, tau0: float, grid: PathGrid, *, experimental: bool = False
) -> LimitSample:
    """Limit law of ``n (beta2_hat - beta2)`` after a break at ``tau0``.

    The default is the unit-root ratio ``(B(1)^2 - 1) / (2 (1 - tau0) int_0^1 B^2)``.
    ``experimental=True`` uses the non-normative reading
    ``F(t) = int_{tau0}^t e^{c(t-s)} dW(s)`` of the undefined functional, giving
    ``int_{tau0}^1 F dW / int_{tau0}^1 F^2``, which has the default law when
    ``c = 0``.
    """
    if c < 0:
        raise ParameterError("c must be non-negative")
    if not 0 <= tau0 < 1:
        raise ParameterError("tau0 must lie in [0, 1)")
    draws = np.empty(grid.reps)
    for b, (lo, hi) in enumerate(_chunks(grid.reps)):
        dw = brownian_increments(grid, b, hi - lo)[:, 0]
        if not experimental:
            w = np.cumsum(dw, axis=-1)
            w_left = np.concatenate([np.zeros((hi - lo, 1)), w[:, :-1]], axis=-1)
            den = 2.0 * (1.0 - tau0) * np.sum(w_left**2, axis=-1) / grid.steps
            draws[lo:hi] = (w[:, -1] ** 2 - 1.0) / den
        else:
            start = int(round(tau0 * grid.steps))
            f = _ou(dw[:, start:], c, grid.steps)
            f_left = np.concatenate([np.zeros((hi - lo, 1)), f[:, :-1]], axis=-1)
            num = np.sum(f_left * dw[:, start:], axis=-1)
            draws[lo:hi] = num / (np.sum(f_left**2, axis=-1) / grid.steps)
    return LimitSample.from_draws(draws)


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "lurbreak"))


def cache_path(p: int, pi0: float, grid: PathGrid) -> Path:
    name = f"nbb_v{CACHE_VERSION}_ou_p{p}_pi{pi0:.4f}_s{grid.steps}_r{grid.reps}_seed{grid.seed}.csv"
    return cache_dir() / name


def write_table(path: Path, p: int, pi0: float, grid: PathGrid, quantiles: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(
            f"# sup-NBB critical values; seed={grid.seed} steps={grid.steps} "
            f"reps={grid.reps} rng={rng_tag()} version={CACHE_VERSION}\n"
        )
        out = csv.writer(fh)
        out.writerow(["p", "pi0", "level", "value"])
        for level, value in sorted(quantiles.items()):
            out.writerow([p, repr(float(pi0)), repr(float(level)), repr(float(value))])
    os.replace(tmp, path)


def read_table(path: Path) -> dict[float, float]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        return {float(r["level"]): float(r["value"]) for r in rows}


def critical_values(
    p: int,
    pi0: float = 0.15,
    grid: PathGrid = PathGrid(steps=2000, reps=100_000),
    *,
    use_cache: bool = True,
) -> tuple[dict[float, float], bool]:
    """sup-NBB critical values at 90/95/99% and whether they came from the cache."""
    path = cache_path(p, pi0, grid)
    if use_cache and path.exists():
        return read_table(path), True
    sample = nbb_sup_quantiles(pi0, p, grid)
    if use_cache:
        write_table(path, p, pi0, grid, sample.quantiles)
    return sample.quantiles, False
