"""Univariate B-spline bases on clamped uniform knot vectors.

Values and first derivatives come from the Cox-de Boor recurrence with
the 0/0 = 0 convention forced by repeated boundary knots.  Inputs
outside the domain are clamped to it, so downstream consumers never see
a non-finite basis value and the splines extend as constants.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class BSplineBasis:
    """Clamped uniform B-spline basis of degree ``degree`` on ``[lo, hi]``.

    The knot vector repeats each boundary ``degree + 1`` times and places
    ``intervals - 1`` uniformly spaced interior knots, giving ``intervals``
    polynomial pieces and ``intervals + degree`` basis functions.
    """

    degree: int
    intervals: int
    lo: float
    hi: float
    knots: Array

    @property
    def size(self) -> int:
        """Number of basis functions, ``intervals + degree``."""
        return self.intervals + self.degree


def make_basis(degree: int, intervals: int, lo: float = 0.0, hi: float = 1.0) -> BSplineBasis:
    """Build a clamped uniform basis of the given degree on ``[lo, hi]``.

    Parameters
    ----------
    degree : int
        Spline degree, at least 1.
    intervals : int
        Number of polynomial pieces, at least 1.
    lo, hi : float
        Domain endpoints with ``lo < hi``.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if intervals < 1:
        raise ValueError(f"intervals must be >= 1, got {intervals}")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("domain endpoints must be finite")
    if not lo < hi:
        raise ValueError(f"domain must satisfy lo < hi, got [{lo}, {hi}]")
    interior = lo + (hi - lo) * np.arange(1, intervals) / intervals
    knots = np.concatenate([
        np.full(degree + 1, lo),
        interior,
        np.full(degree + 1, hi),
    ])
    return BSplineBasis(degree, intervals, float(lo), float(hi), knots)


def _indicator_base(knots: Array, x: Array) -> Array:
    """Degree-0 layer of the recurrence: half-open interval indicators.

    Returns shape ``(len(x), len(knots) - 1)``.  The half-open convention
    yields right-limit values at interior knots; the last nonempty
    interval additionally claims its right endpoint so the top knot is
    covered.
    """
    left = knots[:-1]
    right = knots[1:]
    xs = x[:, None]
    base = (left <= xs) & (xs < right)
    # x == hi falls in no half-open interval; assign it to the last
    # nonempty one so partition of unity holds on the closed domain.
    top = knots[-1]
    at_top = xs == top
    if np.any(at_top):
        owner = (right == top) & (left < right)
        base = base | (at_top & owner)
    return base.astype(np.float64)


def _raise_degree(knots: Array, lower: Array, j: int, x: Array) -> Array:
    """One Cox-de Boor step from degree ``j - 1`` values to degree ``j``."""
    n = lower.shape[1] - 1
    t_i = knots[:n]
    t_ij = knots[j : j + n]
    t_i1 = knots[1 : n + 1]
    t_ij1 = knots[j + 1 : j + 1 + n]
    denom_l = t_ij - t_i
    denom_r = t_ij1 - t_i1
    # 0/0 -> 0 wherever repeated knots collapse a support interval.
    with np.errstate(divide="ignore", invalid="ignore"):
        wl = np.where(denom_l != 0.0, (x[:, None] - t_i) / denom_l, 0.0)
        wr = np.where(denom_r != 0.0, (t_ij1 - x[:, None]) / denom_r, 0.0)
    return wl * lower[:, :n] + wr * lower[:, 1:]


def _levels(basis: BSplineBasis, x: Array, upto: int) -> Array:
    out = _indicator_base(basis.knots, x)
    for j in range(1, upto + 1):
        out = _raise_degree(basis.knots, out, j, x)
    return out


def _clean_input(basis: BSplineBasis, x) -> tuple[Array, bool]:
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.ndim != 1:
        raise ValueError("evaluation points must be a scalar or 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("evaluation points must be finite")
    return np.clip(arr, basis.lo, basis.hi), scalar


def eval_basis(basis: BSplineBasis, x) -> Array:
    """Evaluate all basis functions at ``x``.

    ``x`` may be a scalar or 1-d array; out-of-domain points are clamped.
    Returns shape ``(size,)`` for scalar input, else ``(len(x), size)``.
    """
    pts, scalar = _clean_input(basis, x)
    vals = _levels(basis, pts, basis.degree)
    return vals[0] if scalar else vals


def eval_basis_derivative(basis: BSplineBasis, x) -> Array:
    """First derivatives of all basis functions at ``x``.

    Uses the standard identity through degree ``k - 1`` values; at knots
    the right-limit value is returned, and the derivative is zero in the
    clamped (out-of-domain) region.
    """
    pts, scalar = _clean_input(basis, x)
    k = basis.degree
    low = _levels(basis, pts, k - 1)
    knots = basis.knots
    n = basis.size
    denom_l = knots[k : k + n] - knots[:n]
    denom_r = knots[k + 1 : k + 1 + n] - knots[1 : n + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        term_l = np.where(denom_l != 0.0, low[:, :n] / denom_l, 0.0)
        term_r = np.where(denom_r != 0.0, low[:, 1 : n + 1] / denom_r, 0.0)
    deriv = k * (term_l - term_r)
    raw = np.atleast_1d(np.asarray(x, dtype=np.float64))
    outside = (raw < basis.lo) | (raw > basis.hi)
    if np.any(outside):
        deriv = np.where(outside[:, None], 0.0, deriv)
    return deriv[0] if scalar else deriv
