"""Capacity estimation from computed spectra and arithmetic consistency checks.

A spectrum with |lambda_n| ~ xi / (pi n)^j shows up on a log-log plot as a
line of slope -j; the fitter estimates j from that slope and xi as the
median of |lambda_n| (pi n)^j over a window of converged indices.  The
median makes the estimate exactly homogeneous under eigenvalue scaling and
robust to the sign of the lower-order remainder.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .galerkin import SpectrumResult, RELIABLE_FACTOR

__all__ = [
    "CapacityFit",
    "SignFit",
    "counting_function",
    "fit_capacity",
    "check_additivity",
    "check_restriction_stability",
    "default_window",
    "ComparisonReport",
]

DEFAULT_JMAX = 8
MIN_WINDOW_ENTRIES = 8


def default_window(N, factor_lo=12, factor_hi=RELIABLE_FACTOR):
    """Index window [N/12, N/6] matching the Galerkin reliability factor."""
    lo = max(int(math.ceil(N / factor_lo)), 1)
    hi = int(N // factor_hi)
    if hi < lo:
        raise ValueError(f"basis size N={N} too small for a fit window")
    return (lo, hi)


def counting_function(spec: SpectrumResult, j: int, n: float, sign: str = "+"):
    """#{l : 0 < lambda_l^(-1/j) < n} over the stored arrangement.

    Equivalently the number of eigenvalues of the requested sign with
    magnitude above n^(-j).
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if n <= 0:
        return 0
    arr = spec.positive if sign == "+" else np.abs(spec.negative)
    if len(arr) == 0:
        return 0
    thr = float(n) ** (-j)
    # arr is nonincreasing; count strictly above thr
    ascending = arr[::-1]
    return int(len(arr) - bisect_left(ascending, thr) - _ties(ascending, thr))


def _ties(ascending, thr):
    """Number of entries equal to thr (they fail the strict inequality)."""
    lo = bisect_left(ascending, thr)
    cnt = 0
    while lo + cnt < len(ascending) and ascending[lo + cnt] == thr:
        cnt += 1
    return cnt


@dataclass
class SignFit:
    """Per-sign slope and leading-coefficient estimate."""

    slope: float
    value: float
    residual: float
    count: int


@dataclass
class CapacityFit:
    """Estimated decay order and leading coefficient(s) of a spectrum.

    ``order`` is the rounded integer decay exponent (math.inf when the decay
    beats every polynomial order up to j_max), ``slope`` the raw log-log
    estimate.  Values are reported per sign; odd orders should see the two
    agree.
    """

    order: float
    slope: float
    window: tuple[int, int]
    pos: SignFit | None = None
    neg: SignFit | None = None
    forced_order: bool = False

    @property
    def residual(self):
        return max([f.residual for f in (self.pos, self.neg) if f is not None],
                   default=0.0)

    @property
    def is_infinite(self):
        return math.isinf(self.order)

    def values(self):
        """(xi_plus, xi_minus); missing sides reported as 0."""
        return (self.pos.value if self.pos else 0.0,
                self.neg.value if self.neg else 0.0)

    def value(self):
        """Single-value view: mean of the available per-sign estimates."""
        vals = [f.value for f in (self.pos, self.neg) if f is not None]
        if not vals:
            return 0.0
        return float(np.mean(vals))

    def to_json_dict(self, provenance="fitted"):
        data = {
            "order": "inf" if self.is_infinite else int(self.order),
            "slope": float(self.slope),
            "window": list(self.window),
            "residual": float(self.residual),
            "forced_order": self.forced_order,
            "provenance": provenance,
        }
        for name, f in (("pos", self.pos), ("neg", self.neg)):
            if f is not None:
                data[name] = {"value": float(f.value), "slope": float(f.slope),
                              "residual": float(f.residual), "count": f.count}
        return data


def _window_slice(arr, window):
    lo, hi = window
    if lo < 1 or hi < lo:
        raise ValueError(f"bad window {window}")
    if hi > len(arr):
        return None, None
    idx = np.arange(lo, hi + 1)
    return idx, np.abs(arr[lo - 1:hi])


_UNDERFLOW = 1e-280


def fit_capacity(spec: SpectrumResult, window=None, j_max=DEFAULT_JMAX,
                 force_order=None) -> CapacityFit:
    """Estimate (j, xi) per sign over the given index window.

    The slope comes from a least-squares line through (log n, log |lambda_n|);
    an infinite order is declared when the slope exceeds j_max + 1/2 or the
    eigenvalues underflow.  ``force_order`` pins j (the slope is still
    reported) for callers that know the decay order a priori.
    """
    if window is None:
        if spec.discretization is None:
            raise ValueError("no window given and spectrum has no basis size")
        window = default_window(spec.discretization)
    sides = {}
    slopes = []
    for name, arr in (("pos", spec.positive), ("neg", spec.negative)):
        idx, mags = _window_slice(np.asarray(arr, dtype=float), window)
        if idx is None or len(idx) < MIN_WINDOW_ENTRIES:
            continue
        if np.any(mags < _UNDERFLOW):
            sides[name] = SignFit(slope=math.inf, value=0.0, residual=0.0,
                                  count=len(idx))
            slopes.append(math.inf)
            continue
        coef = np.polyfit(np.log(idx), np.log(mags), 1)
        sides[name] = (idx, mags, -float(coef[0]))
        slopes.append(-float(coef[0]))
    if not sides:
        raise ValueError(
            f"window {window} leaves fewer than {MIN_WINDOW_ENTRIES} entries "
            "on every sign")
    slope = float(np.mean([s for s in slopes if not math.isinf(s)])) \
        if any(not math.isinf(s) for s in slopes) else math.inf
    if force_order is not None:
        order = int(force_order)
    elif math.isinf(slope) or slope > j_max + 0.5:
        order = math.inf
    else:
        order = max(int(round(slope)), 1)
    fits = {}
    for name, payload in sides.items():
        if isinstance(payload, SignFit):
            fits[name] = payload
            continue
        idx, mags, side_slope = payload
        if math.isinf(order):
            fits[name] = SignFit(slope=side_slope, value=0.0, residual=0.0,
                                 count=len(idx))
            continue
        scaled = mags * (math.pi * idx) ** order
        value = float(np.median(scaled))
        residual = float(np.max(np.abs(scaled - value)) / value) if value > 0 \
            else float(np.max(np.abs(scaled)))
        fits[name] = SignFit(slope=side_slope, value=value, residual=residual,
                             count=len(idx))
    return CapacityFit(order=order, slope=slope, window=tuple(window),
                       pos=fits.get("pos"), neg=fits.get("neg"),
                       forced_order=force_order is not None)


@dataclass
class ComparisonReport:
    """Machine-checkable outcome of a consistency check."""

    passed: bool
    description: str
    expected: float | None = None
    actual: float | None = None
    detail: dict | None = None

    def to_json_dict(self):
        data = {"pass": bool(self.passed), "description": self.description}
        if self.expected is not None:
            data["expected"] = float(self.expected)
        if self.actual is not None:
            data["actual"] = float(self.actual)
        if self.detail:
            data["detail"] = self.detail
        return data


def check_additivity(fit1: CapacityFit, fit2: CapacityFit, merged: CapacityFit,
                     tol: float) -> ComparisonReport:
    """Direct sums add capacities through their j-th roots.

    For forms of equal order j with values xi_1, xi_2 the merged spectrum
    must fit to (xi_1^(1/j) + xi_2^(1/j))^j within ``tol`` relative error,
    per sign where both inputs carry that sign.
    """
    if fit1.order != fit2.order or fit1.order != merged.order:
        return ComparisonReport(
            passed=False,
            description="order mismatch between summands and merged fit",
            detail={"orders": [fit1.order, fit2.order, merged.order]})
    j = fit1.order
    worst = 0.0
    detail = {}
    for name in ("pos", "neg"):
        f1, f2, fm = getattr(fit1, name), getattr(fit2, name), getattr(merged, name)
        if f1 is None or f2 is None or fm is None:
            continue
        expected = (f1.value ** (1.0 / j) + f2.value ** (1.0 / j)) ** j
        err = abs(fm.value - expected) / abs(fm.value)
        detail[name] = {"expected": expected, "actual": fm.value, "rel_err": err}
        worst = max(worst, err)
    if not detail:
        return ComparisonReport(passed=False,
                                description="no common sign to compare")
    return ComparisonReport(passed=worst <= tol,
                            description="capacity additivity under direct sum",
                            actual=worst, expected=tol, detail=detail)


def check_restriction_stability(full: SpectrumResult, restricted: SpectrumResult,
                                d: int, slack: float = 1e-9) -> ComparisonReport:
    """Min-max interlacing between a form and its codimension-d restriction.

    Positive side: lambda_n(restricted) <= lambda_n(full) <= lambda_{n-d}(restricted);
    mirrored on the negative side.  ``slack`` absorbs eigensolver roundoff,
    scaled by the leading eigenvalue magnitude.
    """
    if d < 0:
        raise ValueError("codimension must be >= 0")
    worst = 0.0
    eps = 0.0
    checked = 0

    def _side(f, r, sgn):
        nonlocal worst, eps, checked
        f = np.asarray(f, dtype=float) * sgn
        r = np.asarray(r, dtype=float) * sgn
        scale = float(f[0]) if len(f) else 0.0
        eps = max(eps, slack * scale)
        for i in range(min(len(f), len(r))):
            worst = max(worst, r[i] - f[i])
            checked += 1
        for i in range(d, min(len(f), len(r) + d)):
            worst = max(worst, f[i] - r[i - d])
            checked += 1

    _side(full.positive, restricted.positive, 1.0)
    _side(full.negative, restricted.negative, -1.0)
    return ComparisonReport(
        passed=worst <= eps,
        description=f"min-max interlacing at codimension {d}",
        actual=worst, expected=eps, detail={"comparisons": checked})
