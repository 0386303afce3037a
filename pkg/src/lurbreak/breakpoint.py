"""Break-date estimation by minimising the split-sample residual sum of squares."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ._moments import PrefixMoments, fit_from_moments
from .dgp import Dataset
from .estimators import IvxSpec, SegmentFit, ivx_instrument, ivx_segment, ols_segment
from .exceptions import DegenerateSegmentError, ParameterError

METHODS = ("ols", "ivx")
DataLike = Union[Dataset, tuple]

# rows handled per prefix-moment block in batched scans
_BLOCK_BYTES = 64 * 2**20


def as_design(data: DataLike) -> tuple[np.ndarray, np.ndarray]:
    """``(y, regressor)`` from a :class:`Dataset` or a ``(y, x)`` pair."""
    if isinstance(data, Dataset):
        return data.design()
    y, x = data
    return np.asarray(y, dtype=float), np.asarray(x, dtype=float)


@dataclass(frozen=True)
class TrimSpec:
    """Candidate break fractions ``tau in [pi0, 1 - pi0]``.

    ``grid_step=None`` scans every admissible integer ``k``. A grid visits
    ``k = floor(tau n)`` for ``tau = pi0, pi0 + step, ...`` plus the upper
    end point ``1 - pi0``, restricted to admissible ``k``.
    """

    pi0: float = 0.15
    grid_step: float | None = 0.01

    def __post_init__(self) -> None:
        if not 0 < self.pi0 < 0.5:
            raise ParameterError("pi0 must lie in (0, 0.5)")
        if self.grid_step is not None and not 0 < self.grid_step <= self.pi0 + 1e-12:
            raise ParameterError("grid_step must lie in (0, pi0]")

    def min_length(self, n: int, intercept: bool = False) -> int:
        return max(math.ceil(self.pi0 * n - 1e-9), 3 + int(intercept))

    def candidates(self, n: int, intercept: bool = False) -> np.ndarray:
        kmin = self.min_length(n, intercept)
        kmax = n - kmin
        if kmax < kmin:
            return np.empty(0, dtype=int)
        if self.grid_step is None:
            return np.arange(kmin, kmax + 1)
        count = math.floor((1.0 - 2.0 * self.pi0) / self.grid_step + 1e-9)
        taus = np.append(self.pi0 + self.grid_step * np.arange(count + 1), 1.0 - self.pi0)
        ks = np.floor(taus * n + 1e-9).astype(int)
        return np.unique(ks[(ks >= kmin) & (ks <= kmax)])


EXHAUSTIVE = TrimSpec(grid_step=None)


@dataclass
class BreakEstimate:
    k_hat: tuple[int, ...]
    n: int
    fits: list[SegmentFit]
    candidates: np.ndarray
    rss_profile: np.ndarray
    method: str
    intercept: bool
    first_break: int | None = None
    warning: str | None = None

    @property
    def tau_hat(self) -> tuple[float, ...]:
        return tuple(k / self.n for k in self.k_hat)

    @property
    def delta_hat(self) -> tuple[float, ...]:
        return tuple(a.slope - b.slope for a, b in zip(self.fits, self.fits[1:]))

    @property
    def rss(self) -> float:
        return sum(f.rss for f in self.fits)


@dataclass(frozen=True)
class RssDecomposition:
    eta1: float
    eta2: float
    eta3: float
    eta4: float
    omega_n: float
    lhs: float
    jumps: tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def rhs(self) -> float:
        d1, d2 = self.jumps
        return (
            self.eta1 * d1 + self.eta2 * d2 + self.eta3 * d1**2 + self.eta4 * d2**2
            + self.omega_n
        )

    @property
    def relative_error(self) -> float:
        return abs(self.lhs - self.rhs) / (1.0 + abs(self.lhs))


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")


def _columns(method: str, intercept: bool, residuals: str, form: str):
    design = ["one", "x"] if intercept else ["x"]
    if method == "ols":
        return design, None, None
    if residuals not in ("instrument", "regressor"):
        raise ParameterError(f"unknown residual basis {residuals!r}")
    if form not in ("iv", "self"):
        raise ParameterError(f"unknown IVX form {form!r}")
    inst = ["one", "z"] if intercept else ["z"]
    target = design if form == "iv" else inst
    return target, inst, inst if residuals == "instrument" else design


def _segment_fit(y, x, z, lo, hi, method, intercept, residuals, form) -> SegmentFit:
    if method == "ols":
        return ols_segment(y, x, (lo, hi), intercept)
    return ivx_segment(y, x, z, (lo, hi), intercept, form=form, residuals=residuals)


def _instrument(x, method, z, ivx):
    if method != "ivx":
        return None
    return ivx_instrument(x, ivx) if z is None else np.asarray(z, dtype=float)


def rss_split(
    data: DataLike,
    k: int,
    method: str = "ols",
    intercept: bool = False,
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    residuals: str = "instrument",
    form: str = "iv",
) -> float:
    """RSS of separate fits on rows ``[0, k)`` and ``[k, n)``.

    For IVX the instrument is built on the full sample and the residuals are
    ``y - b z`` (``residuals="instrument"``) or ``y - b x`` (``"regressor"``).
    """
    _check_method(method)
    y, x = as_design(data)
    n = y.shape[0]
    need = 3 + int(intercept)
    if k < need:
        raise DegenerateSegmentError(f"left segment has {k} rows, need {need}", side="left")
    if n - k < need:
        raise DegenerateSegmentError(
            f"right segment has {n - k} rows, need {need}", side="right"
        )
    z = _instrument(x, method, z, ivx)
    total = 0.0
    for side, (lo, hi) in (("left", (0, k)), ("right", (k, n))):
        try:
            total += _segment_fit(y, x, z, lo, hi, method, intercept, residuals, form).rss
        except DegenerateSegmentError as exc:
            raise DegenerateSegmentError(f"{side} segment: {exc}", side=side) from exc
    return total


def _moments(y, x, z) -> PrefixMoments:
    return PrefixMoments(y, x, z)


def _scan(pm, lo, hi, cands, cols):
    """RSS over candidates for rows ``[lo, hi)``; degenerate candidates get ``inf``."""
    design, inst, resid = cols
    _, rss1, s1 = fit_from_moments(pm.segment(lo, cands), pm.idx, design, inst, resid)
    _, rss2, s2 = fit_from_moments(pm.segment(cands, hi), pm.idx, design, inst, resid)
    rss = np.maximum(rss1, 0.0) + np.maximum(rss2, 0.0)
    bad = s1 | s2 | ~np.isfinite(rss)
    return np.where(bad, np.inf, rss), bad


def rss_profile(
    data: DataLike,
    candidates: Sequence[int] | None = None,
    method: str = "ols",
    intercept: bool = False,
    *,
    trim: TrimSpec = TrimSpec(),
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    residuals: str = "instrument",
    form: str = "iv",
) -> tuple[np.ndarray, np.ndarray]:
    """``(candidates, rss)`` for every candidate split of the full sample."""
    _check_method(method)
    y, x = as_design(data)
    n = y.shape[0]
    cands = trim.candidates(n, intercept) if candidates is None else np.asarray(candidates)
    z = _instrument(x, method, z, ivx)
    rss, _ = _scan(_moments(y, x, z), 0, n, cands, _columns(method, intercept, residuals, form))
    return cands, rss


def _fits(y, x, z, ks, method, intercept, residuals, form) -> list[SegmentFit]:
    edges = [0, *ks, y.shape[0]]
    return [
        _segment_fit(y, x, z, lo, hi, method, intercept, residuals, form)
        for lo, hi in zip(edges, edges[1:])
    ]


def estimate_single_break(
    data: DataLike,
    trim: TrimSpec = TrimSpec(),
    method: str = "ols",
    intercept: bool = False,
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    residuals: str = "instrument",
    form: str = "iv",
) -> BreakEstimate:
    """``k_hat = argmin_k RSS(k)`` over the trimmed candidates, smallest ``k`` on ties."""
    _check_method(method)
    y, x = as_design(data)
    n = y.shape[0]
    cands = trim.candidates(n, intercept)
    if cands.size == 0:
        raise ParameterError(f"no admissible break candidates for n={n}, pi0={trim.pi0}")
    z = _instrument(x, method, z, ivx)
    cols = _columns(method, intercept, residuals, form)
    rss, bad = _scan(_moments(y, x, z), 0, n, cands, cols)
    if bad.all():
        raise DegenerateSegmentError("every candidate split is degenerate")
    k = int(cands[int(np.argmin(rss))])
    fits = _fits(y, x, z, [k], method, intercept, residuals, form)
    return BreakEstimate((k,), n, fits, cands, rss, method, intercept, first_break=k)


def estimate_two_breaks_sequential(
    data: DataLike,
    trim: TrimSpec = TrimSpec(),
    method: str = "ols",
    intercept: bool = False,
    *,
    side: str = "auto",
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    residuals: str = "instrument",
    form: str = "iv",
) -> BreakEstimate:
    """Two breaks by sequential single-break scans.

    Step 1 scans the full sample. Step 2 rescans a subsample cut at the
    first break: ``side="left"`` uses the rows before it, ``"right"`` those
    after, and ``"auto"`` scans both and keeps the split with the larger RSS
    reduction. The trimming fraction is applied to the subsample length.
    Breaks are returned in ascending order; ``first_break`` records Step 1.
    """
    _check_method(method)
    if side not in ("auto", "left", "right"):
        raise ParameterError(f"side must be auto, left or right, got {side!r}")
    y, x = as_design(data)
    n = y.shape[0]
    z = _instrument(x, method, z, ivx)
    step1 = estimate_single_break((y, x), trim, method, intercept, ivx=ivx, z=z,
                                  residuals=residuals, form=form)
    ka = step1.k_hat[0]
    cols = _columns(method, intercept, residuals, form)
    pm = _moments(y, x, z)
    best = None
    for name in ("left", "right") if side == "auto" else (side,):
        lo, hi = (0, ka) if name == "left" else (ka, n)
        cands = lo + trim.candidates(hi - lo, intercept)
        if cands.size == 0:
            continue
        rss, bad = _scan(pm, lo, hi, cands, cols)
        if bad.all():
            continue
        j = int(np.argmin(rss))
        _, whole, _ = fit_from_moments(pm.segment(lo, hi), pm.idx, *cols)
        gain = float(whole) - float(rss[j])
        if best is None or gain > best[0]:
            best = (gain, int(cands[j]))
    if best is None:
        step1.warning = "second-step subsample too short; single break reported"
        return step1
    ks = tuple(sorted((ka, best[1])))
    fits = _fits(y, x, z, ks, method, intercept, residuals, form)
    return BreakEstimate(ks, n, fits, step1.candidates, step1.rss_profile, method,
                         intercept, first_break=ka)


def rss_difference_decomposition(
    y: np.ndarray, x: np.ndarray, k1: int, k2: int, true_betas: Sequence[float]
) -> RssDecomposition:
    """Split ``RSS(k1) - RSS(k2)`` into jump terms and a pure-noise remainder.

    Three no-intercept regimes on rows ``[0, k1)``, ``[k1, k2)``, ``[k2, n)``
    with slopes ``true_betas``; ``RSS(k)`` is the two-regime fit split at
    ``k``. With ``A_j = sum x^2`` and ``e_j = sum x eps`` over regime ``j``
    the identity is exact in finite samples; ``eta3 <= 0 <= eta4``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = y.shape[0]
    if len(true_betas) != 3:
        raise ParameterError("true_betas must hold three slopes")
    if not 1 < k1 < k2 < n - 1:
        raise ParameterError(f"need 1 < k1 < k2 < n - 1, got k1={k1}, k2={k2}, n={n}")
    b1, b2, b3 = (float(b) for b in true_betas)
    beta_t = np.where(np.arange(n) < k1, b1, np.where(np.arange(n) < k2, b2, b3))
    eps = y - beta_t * x
    parts = [slice(0, k1), slice(k1, k2), slice(k2, n)]
    a1, a2, a3 = (float(x[s] @ x[s]) for s in parts)
    e1, e2, e3 = (float(x[s] @ eps[s]) for s in parts)
    if min(a1, a2, a3) <= 0:
        raise DegenerateSegmentError("a regime has an identically zero regressor")
    eta1 = 2.0 * (e1 / a1 - (e1 + e2) / (a1 + a2)) * a1
    eta2 = 2.0 * (a2 * e3 - e2 * a3) / (a2 + a3)
    eta3 = -a1 * a2 / (a1 + a2)
    eta4 = a2 * a3 / (a2 + a3)
    omega = (
        (e1 + e2) ** 2 / (a1 + a2) + e3**2 / a3 - e1**2 / a1 - (e2 + e3) ** 2 / (a2 + a3)
    )
    lhs = rss_split((y, x), k1) - rss_split((y, x), k2)
    return RssDecomposition(eta1, eta2, eta3, eta4, omega, lhs, (b2 - b1, b3 - b2))


@dataclass
class BatchBreaks:
    """Row-wise single-break estimates for a stack of samples."""

    k_hat: np.ndarray
    coef1: np.ndarray
    coef2: np.ndarray
    rss: np.ndarray
    failed: np.ndarray


def _blocks(r: int, n: int, m: int):
    size = max(1, _BLOCK_BYTES // max(1, (n + 1) * m * m * 8))
    for start in range(0, r, size):
        yield slice(start, min(r, start + size))


def single_break_batch(
    y: np.ndarray,
    x: np.ndarray,
    trim: TrimSpec = TrimSpec(),
    method: str = "ols",
    intercept: bool = False,
    *,
    ivx: IvxSpec = IvxSpec(),
    z: np.ndarray | None = None,
    residuals: str = "instrument",
    form: str = "iv",
) -> BatchBreaks:
    """:func:`estimate_single_break` applied to each row of ``(R, n)`` arrays."""
    _check_method(method)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r, n = y.shape
    cands = trim.candidates(n, intercept)
    if cands.size == 0:
        raise ParameterError(f"no admissible break candidates for n={n}")
    z = _instrument(x, method, z, ivx)
    cols = _columns(method, intercept, residuals, form)
    p = len(cols[0])
    out = BatchBreaks(
        np.zeros(r, dtype=int), np.full((r, p), np.nan), np.full((r, p), np.nan),
        np.full(r, np.nan), np.zeros(r, dtype=bool),
    )
    m = 3 + (z is not None)
    for blk in _blocks(r, n, m):
        pm = _moments(y[blk], x[blk], None if z is None else z[blk])
        rss, bad = _scan(pm, 0, n, cands, cols)
        j = np.argmin(rss, axis=-1)
        k = cands[j]
        c1, _, _ = fit_from_moments(pm.rowwise(0, k), pm.idx, *cols)
        c2, _, _ = fit_from_moments(pm.rowwise(k, n), pm.idx, *cols)
        out.k_hat[blk] = k
        out.coef1[blk] = c1
        out.coef2[blk] = c2
        out.rss[blk] = np.take_along_axis(rss, j[:, None], axis=-1)[:, 0]
        out.failed[blk] = bad.all(axis=-1)
    return out
