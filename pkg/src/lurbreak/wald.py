"""Pointwise and sup Wald statistics for a single break in a predictive regression.

The IVX statistic follows the reference construction: regime-masked design
``[1, x]`` instrumented by ``[1, z]``, coefficient estimates
``B_i = (X_i'Z_i)^+ Z_i'y``, ``Q_i = (Z_i'X_i)^+ Z_i'Z_i (X_i'Z_i)^+`` and

    W(k) = (B_1 - B_2)' (Q_1 + Q_2)^+ (B_1 - B_2) / sigma2_hat,

with ``sigma2_hat = RSS / n`` from the unrestricted two-regime OLS fit. The
OLS statistic is the same expression with ``z = x``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._moments import PINV_RTOL, PrefixMoments, fit_from_moments, pinv_small
from .breakpoint import METHODS, DataLike, TrimSpec, _blocks, as_design
from .estimators import IvxSpec, ivx_instrument
from .exceptions import DegenerateSegmentError, ParameterError

INTERCEPT_MODES = ("joint", "slope", "none")


@dataclass
class WaldScan:
    grid: np.ndarray
    ks: np.ndarray
    stats: np.ndarray
    sup_value: float
    argmax_k: int
    method: str
    intercept: str
    restrictions: int
    singular: np.ndarray


def restrictions(intercept: str) -> int:
    """Number of tested coefficients for an intercept mode."""
    _check_mode(intercept)
    return 2 if intercept == "joint" else 1


def _check_mode(intercept: str) -> None:
    if intercept not in INTERCEPT_MODES:
        raise ParameterError(f"intercept must be one of {INTERCEPT_MODES}, got {intercept!r}")


def _layout(method: str, intercept: str):
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")
    _check_mode(intercept)
    design = ["x"] if intercept == "none" else ["one", "x"]
    inst = design if method == "ols" else [c if c == "one" else "z" for c in design]
    tested = [1] if intercept == "slope" else list(range(len(design)))
    return design, inst, tested


def _wald(m1, m2, idx, n, design, inst, tested):
    """Wald statistics from regime moment matrices; returns ``(stats, singular)``."""
    _, rss1, _ = fit_from_moments(m1, idx, design)
    _, rss2, _ = fit_from_moments(m2, idx, design)
    sigma2 = (np.maximum(rss1, 0.0) + np.maximum(rss2, 0.0)) / n
    d_ix = [idx[c] for c in design]
    i_ix = [idx[c] for c in inst]
    y = idx["y"]
    coefs, qs, singular = [], [], np.zeros(m1.shape[:-2], dtype=bool)
    for m in (m1, m2):
        a_inv, sing = pinv_small(m[..., i_ix, :][..., :, d_ix])
        zz = m[..., i_ix, :][..., :, i_ix]
        coefs.append(np.einsum("...ij,...j->...i", a_inv, m[..., i_ix, y]))
        qs.append(a_inv @ zz @ np.swapaxes(a_inv, -1, -2))
        singular |= sing
    d = (coefs[0] - coefs[1])[..., tested]
    q = (qs[0] + qs[1])[..., tested, :][..., :, tested]
    q_inv, sing = pinv_small(q)
    singular |= sing
    quad = np.maximum(np.einsum("...i,...ij,...j->...", d, q_inv, d), 0.0)
    scale = np.maximum(m1[..., y, y] + m2[..., y, y], np.finfo(float).tiny)
    flat = sigma2 <= PINV_RTOL * scale / n
    with np.errstate(divide="ignore", invalid="ignore"):
        stats = np.where(flat, np.where(quad > 0, np.inf, 0.0), quad / sigma2)
    return stats, singular | flat


def _prepare(y, x, method, z, ivx):
    if method == "ivx" and z is None:
        z = ivx_instrument(x, ivx)
    return PrefixMoments(y, x, z if method == "ivx" else None)


def wald_profile(
    data: DataLike,
    candidates: Sequence[int],
    method: str = "ols",
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Wald statistics at each candidate ``k`` (first regime rows ``[0, k)``)."""
    design, inst, tested = _layout(method, intercept)
    y, x = as_design(data)
    n = y.shape[0]
    ks = np.asarray(candidates, dtype=int)
    need = len(design) + 1
    if ks.size and (ks.min() < need or ks.max() > n - need):
        raise DegenerateSegmentError(f"candidates must leave at least {need} rows per regime")
    pm = _prepare(y, x, method, z, ivx)
    return _wald(pm.segment(0, ks), pm.segment(ks, n), pm.idx, n, design, inst, tested)


def _point(data, k, method, intercept, ivx, z) -> float:
    stats, singular = wald_profile(data, [k], method, intercept, ivx=ivx, z=z)
    if singular[0]:
        warnings.warn(f"singular Wald ingredients at k={k}; pseudo-inverse used", RuntimeWarning)
    return float(stats[0])


def wald_ols_at(data: DataLike, k: int, intercept: str = "joint") -> float:
    """Two-regime OLS Wald statistic for equal coefficients across a split at ``k``."""
    return _point(data, k, "ols", intercept, IvxSpec(), None)


def wald_ivx_at(
    data: DataLike,
    k: int,
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
) -> float:
    """IVX Wald statistic at ``k``; ``z`` overrides the full-sample instrument."""
    return _point(data, k, "ivx", intercept, ivx, z)


def sup_wald_scan(
    data: DataLike,
    method: str = "ols",
    trim: TrimSpec = TrimSpec(),
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    candidates: Sequence[int] | None = None,
) -> WaldScan:
    """Wald profile over the trimmed grid with its supremum and first argmax."""
    y, _ = as_design(data)
    n = y.shape[0]
    ks = trim.candidates(n, intercept != "none") if candidates is None else np.asarray(candidates)
    if ks.size == 0:
        raise ParameterError(f"no admissible break candidates for n={n}, pi0={trim.pi0}")
    stats, singular = wald_profile(data, ks, method, intercept, ivx=ivx, z=z)
    j = int(np.argmax(stats))
    return WaldScan(
        ks / n, ks, stats, float(stats[j]), int(ks[j]), method, intercept,
        restrictions(intercept), singular,
    )


def sup_wald_batch(
    y: np.ndarray,
    x: np.ndarray,
    method: str = "ols",
    trim: TrimSpec = TrimSpec(),
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    candidates: Sequence[int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise sup statistics and argmax ``k`` for ``(R, n)`` arrays."""
    design, inst, tested = _layout(method, intercept)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r, n = y.shape
    ks = trim.candidates(n, intercept != "none") if candidates is None else np.asarray(candidates)
    if method == "ivx" and z is None:
        z = ivx_instrument(x, ivx)
    sup = np.empty(r)
    arg = np.empty(r, dtype=int)
    for blk in _blocks(r, n, 4 if method == "ivx" else 3):
        pm = PrefixMoments(y[blk], x[blk], z[blk] if method == "ivx" else None)
        stats, _ = _wald(pm.segment(0, ks), pm.segment(ks, n), pm.idx, n, design, inst, tested)
        j = np.argmax(stats, axis=-1)
        sup[blk] = np.take_along_axis(stats, j[:, None], axis=-1)[:, 0]
        arg[blk] = ks[j]
    return sup, arg


def wald_at_batch(
    y: np.ndarray,
    x: np.ndarray,
    k: int,
    method: str = "ols",
    intercept: str = "joint",
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
) -> np.ndarray:
    """Row-wise Wald statistic at a fixed ``k``."""
    sup, _ = sup_wald_batch(y, x, method, TrimSpec(), intercept, ivx=ivx, z=z, candidates=[k])
    return sup
