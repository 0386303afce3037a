"""Prefix sums of cross products for O(1) segment fits.

Columns are ``(1, r, z, y)`` (``z`` optional). For a half-open row range
``[lo, hi)`` the matrix of sums of cross products is ``P[hi] - P[lo]``, from
which OLS/IV coefficients, RSS and Wald ingredients follow in closed form.
Leading axes (replications) broadcast throughout.
"""

from __future__ import annotations

import numpy as np

PINV_RTOL = 1e-12


class PrefixMoments:
    def __init__(self, y: np.ndarray, r: np.ndarray, z: np.ndarray | None = None) -> None:
        y = np.asarray(y, dtype=float)
        cols = [np.ones_like(y), np.broadcast_to(r, y.shape)]
        if z is not None:
            cols.append(np.broadcast_to(z, y.shape))
        cols.append(y)
        c = np.stack(cols, axis=-1)
        m = c.shape[-1]
        self.idx = {"one": 0, "x": 1, "z": 2 if z is not None else None, "y": m - 1}
        outer = c[..., :, :, None] * c[..., :, None, :]
        self.P = np.zeros(y.shape[:-1] + (y.shape[-1] + 1, m, m))
        np.cumsum(outer, axis=-3, out=self.P[..., 1:, :, :])
        self.n = y.shape[-1]

    def segment(self, lo, hi) -> np.ndarray:
        """Cross-product sums over rows ``[lo, hi)``; ``lo``/``hi`` may be index arrays."""
        lo, hi = np.broadcast_arrays(np.asarray(lo), np.asarray(hi))
        return self.P[..., hi, :, :] - self.P[..., lo, :, :]

    def rowwise(self, lo, hi) -> np.ndarray:
        """Sums over ``[lo[r], hi[r])`` for each leading row ``r`` of a 2-d stack."""
        rows = np.arange(self.P.shape[0])
        lo, hi = np.broadcast_arrays(np.asarray(lo), np.asarray(hi))
        return self.P[rows, hi] - self.P[rows, lo]


def pinv_small(a: np.ndarray, rtol: float = PINV_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Batched pseudo-inverse for stacks of 1x1 / 2x2 matrices.

    Returns ``(pinv, singular)``; well-conditioned 2x2 blocks use the closed
    form inverse, the rest go through SVD with singular values below
    ``rtol * s_max`` dropped.
    """
    p = a.shape[-1]
    if p == 1:
        s = np.abs(a[..., 0, 0])
        ok = s > 0
        out = np.where(ok, 1.0 / np.where(ok, a[..., 0, 0], 1.0), 0.0)[..., None, None]
        return out, ~ok
    if p != 2:
        return np.linalg.pinv(a, rcond=rtol), np.zeros(a.shape[:-2], dtype=bool)
    a11, a12, a21, a22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1]
    det = a11 * a22 - a12 * a21
    fro2 = a11**2 + a12**2 + a21**2 + a22**2
    # s_min / s_max >= |det| / ||a||_F^2
    ok = np.abs(det) > 1e3 * rtol * fro2
    safe = np.where(ok, det, 1.0)
    out = np.empty_like(a)
    out[..., 0, 0] = a22 / safe
    out[..., 0, 1] = -a12 / safe
    out[..., 1, 0] = -a21 / safe
    out[..., 1, 1] = a11 / safe
    singular = np.zeros(a.shape[:-2], dtype=bool)
    if not ok.all():
        bad = ~ok
        out[bad] = np.linalg.pinv(a[bad], rcond=rtol)
        sv = np.linalg.svd(a[bad], compute_uv=False)
        singular[bad] = sv[..., -1] <= rtol * sv[..., 0]
    return out, singular


def _take(m: np.ndarray, rows: list[int], cols: list[int]) -> np.ndarray:
    return m[..., rows, :][..., :, cols]


def fit_from_moments(
    m: np.ndarray,
    idx: dict,
    design: list[str],
    instrument: list[str] | None = None,
    resid: list[str] | None = None,
):
    """Coefficients ``(I'D)^+ I'y`` and RSS of ``y - basis @ coef``.

    ``design``/``instrument``/``resid`` are column names from ``idx``; OLS
    is ``instrument = resid = design``.
    """
    d = [idx[c] for c in design]
    i = d if instrument is None else [idx[c] for c in instrument]
    b = d if resid is None else [idx[c] for c in resid]
    y = idx["y"]
    a_inv, singular = pinv_small(_take(m, i, d))
    coef = np.einsum("...ij,...j->...i", a_inv, m[..., i, y])
    rss = (
        m[..., y, y]
        - 2.0 * np.einsum("...i,...i->...", coef, m[..., b, y])
        + np.einsum("...i,...ij,...j->...", coef, _take(m, b, b), coef)
    )
    return coef, rss, singular
