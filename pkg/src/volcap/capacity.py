"""Predicted eigenvalue asymptotics from the matrix family A_j.

For a 2n-by-k matrix function Z on [0, 1] define

    A_{2k-1}(t) = (d^{k-1}Z)^T J (d^{k-1}Z),   A_{2k}(t) = (d^{k-1}Z)^T J (d^k Z),

with J the standard symplectic matrix.  The lowest order j with A_j not
identically zero decides the decay exponent of the eigenvalues of the
associated Volterra quadratic form, and the pointwise root-sums of the
spectrum of A_j integrate to the leading coefficient:

    odd j:   xi      = (int mu_t dt)^j,  mu_t = sum of (-i rho)^(1/j) over
             eigenvalues rho of A_j(t) with -i rho > 0,
    even j:  xi(+/-) = (int mu_t(+/-) dt)^j from the positive / negative
             eigenvalues of the symmetric A_j(t).

Eigenvalues decay like xi / (pi n)^j with remainder exponent 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.legendre as npleg

from .matfun import MatrixFunction, SymplecticForm, sandwich

__all__ = [
    "CapacityResult",
    "build_Aj",
    "first_nonzero_order",
    "mu_profile",
    "predict_capacity",
    "MuProfile",
]

#: informational remainder exponent of the eigenvalue asymptotics
REMAINDER_ORDER = 0.5

DEFAULT_TOL = 1e-10
DEFAULT_JMAX = 8
_GRID = 256
_QUAD_START = 64
_QUAD_MAX = 4096
_QUAD_RTOL = 1e-9


def build_Aj(Z: MatrixFunction, j: int, form: SymplecticForm) -> MatrixFunction:
    """k-by-k matrix function A_j built from derivatives of Z.

    Odd j uses the same derivative order on both sides, so the result is
    pointwise skew-symmetric by construction; even j pairs consecutive
    derivative orders.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if Z.rows != form.dim:
        raise ValueError(
            f"Z has {Z.rows} rows but the symplectic form has dimension {form.dim}")
    k = (j + 1) // 2
    left = Z.derivative(k - 1)
    right = left if j % 2 else Z.derivative(k)
    return sandwich(left, form, right)


def _zero_measure(F: MatrixFunction, grid=_GRID):
    """Max of grid sup-norm and coefficient norm, both scale like sup|F|."""
    return max(F.sup_norm(grid), F.coeff_max())


def first_nonzero_order(Z, form, j_max=DEFAULT_JMAX, tol=DEFAULT_TOL):
    """Smallest j <= j_max with A_j not identically zero, else math.inf.

    A function counts as zero when both its 256-point grid sup-norm and its
    coefficient norm stay below ``tol``; this keeps projection residue from
    non-polynomial inputs from producing spurious low orders.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    for j in range(1, j_max + 1):
        if _zero_measure(build_Aj(Z, j, form)) > tol:
            return j
    return math.inf


@dataclass
class MuProfile:
    """Sampled nonnegative profile(s) t -> mu used in the capacity integral."""

    j: int
    ts: np.ndarray
    mu_pos: np.ndarray
    mu_neg: np.ndarray | None = None

    @property
    def two_sided(self):
        return self.mu_neg is not None


def _mu_samples(Aj_values, j):
    """mu values for a batch of A_j matrices, shape (npts, k, k) -> (npts,)."""
    if j % 2:
        # skew case: eigenvalues +/- i s come in pairs; -A^2 is symmetric PSD
        # with each s^2 listed twice, so half the root-sum gives mu.
        M = -np.matmul(Aj_values, Aj_values)
        M = 0.5 * (M + M.transpose(0, 2, 1))
        evals = np.linalg.eigvalsh(M)
        if not np.all(np.isfinite(evals)):
            raise RuntimeError("non-finite eigenvalues in skew profile")
        evals = np.clip(evals, 0.0, None)
        s = np.sqrt(evals)
        return 0.5 * np.sum(s ** (1.0 / j), axis=1), None
    sym = 0.5 * (Aj_values + Aj_values.transpose(0, 2, 1))
    evals = np.linalg.eigvalsh(sym)
    if not np.all(np.isfinite(evals)):
        raise RuntimeError("non-finite eigenvalues in symmetric profile")
    pos = np.where(evals > 0.0, evals, 0.0) ** (1.0 / j)
    neg = np.where(evals < 0.0, -evals, 0.0) ** (1.0 / j)
    return np.sum(pos, axis=1), np.sum(neg, axis=1)


def mu_profile(Aj: MatrixFunction, j: int, nodes_per_piece=_GRID):
    """Sample the root-sum eigenvalue profile(s) of A_j on a dense grid."""
    if j < 1:
        raise ValueError("j must be >= 1")
    ts = np.unique(np.concatenate([
        np.linspace(0.0, 1.0, nodes_per_piece), Aj.knots]))
    vals = Aj.eval_many(ts)
    pos, neg = _mu_samples(vals, j)
    return MuProfile(j=j, ts=ts, mu_pos=pos, mu_neg=neg)


def _integrate_mu(Aj, j, rtol=_QUAD_RTOL):
    """Gauss-Legendre integral of mu (and mu-) with node doubling.

    The profile can have square-root kinks where eigenvalues cross zero, so
    the per-piece node count doubles until the integrals settle to ``rtol``
    relative change (capped at 4096 nodes); the achieved change is returned.
    """
    prev = None
    q = _QUAD_START
    while True:
        x, w = npleg.leggauss(q)
        tot_pos = tot_neg = 0.0
        for lo, hi in zip(Aj.knots[:-1], Aj.knots[1:]):
            half = 0.5 * (hi - lo)
            ts = 0.5 * (lo + hi) + half * x
            pos, neg = _mu_samples(Aj.eval_many(ts), j)
            tot_pos += half * float(np.dot(w, pos))
            if neg is not None:
                tot_neg += half * float(np.dot(w, neg))
        cur = (tot_pos, tot_neg)
        if prev is not None:
            scale = max(abs(cur[0]), abs(cur[1]), 1e-300)
            change = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1])) / scale
            if change < rtol or q >= _QUAD_MAX:
                return cur, change
        prev = cur
        q *= 2


@dataclass
class CapacityResult:
    """Predicted leading eigenvalue coefficient.

    ``order`` is a positive integer or math.inf.  Odd orders carry a single
    ``value``; even orders carry ``value_pair = (xi_plus, xi_minus)``.  The
    profile samples that produced the integrals are kept for inspection and
    serialization.
    """

    order: float
    value: float | None = None
    value_pair: tuple[float, float] | None = None
    profile: MuProfile | None = None
    remainder_order: float = REMAINDER_ORDER
    quad_change: float = 0.0
    zero_margin: float = 0.0

    @property
    def is_infinite(self):
        return math.isinf(self.order)

    def values(self):
        """Always a (xi_plus, xi_minus) pair; odd orders are symmetric."""
        if self.is_infinite:
            return (0.0, 0.0)
        if self.value_pair is not None:
            return self.value_pair
        return (self.value, self.value)

    def to_json_dict(self, provenance="predicted"):
        data = {
            "order": "inf" if self.is_infinite else int(self.order),
            "remainder_order": self.remainder_order,
            "provenance": provenance,
        }
        if self.value is not None:
            data["value"] = float(self.value)
        if self.value_pair is not None:
            data["value_pair"] = [float(v) for v in self.value_pair]
        if self.profile is not None:
            if self.profile.two_sided:
                data["mu_samples"] = [
                    {"t": float(t), "mu": [float(p), float(m)]}
                    for t, p, m in zip(self.profile.ts, self.profile.mu_pos,
                                       self.profile.mu_neg)]
            else:
                data["mu_samples"] = [
                    {"t": float(t), "mu": float(p)}
                    for t, p in zip(self.profile.ts, self.profile.mu_pos)]
        return data


def predict_capacity(Z, form, j_max=DEFAULT_JMAX, tol=DEFAULT_TOL):
    """Order and value(s) of the predicted eigenvalue asymptotics of Z.

    Composes the first-nonzero-order scan, the profile sampling and the
    profile quadrature.  Functions below ``tol`` count as identically zero;
    the margin (largest sup-norm among the discarded orders) is reported.
    """
    margin = 0.0
    order = math.inf
    for j in range(1, j_max + 1):
        Aj = build_Aj(Z, j, form)
        measure = _zero_measure(Aj)
        if measure > tol:
            order = j
            break
        margin = max(margin, measure)
    if math.isinf(order):
        return CapacityResult(order=math.inf, zero_margin=margin)
    profile = mu_profile(Aj, order)
    (ipos, ineg), change = _integrate_mu(Aj, order)
    if order % 2:
        return CapacityResult(order=order, value=ipos ** order, profile=profile,
                              quad_change=change, zero_margin=margin)
    return CapacityResult(order=order,
                          value_pair=(ipos ** order, ineg ** order),
                          profile=profile, quad_change=change,
                          zero_margin=margin)
