"""Second variations of optimal control problems and their condition checks.

The Hessian of a control cost at an extremal takes the form

    d2J(u) = - int <H_t u, u> dt - int int_{tau<t} sigma(Z_tau u_tau, Z_t u_t)

on the subspace where int X_t u_t dt = 0, with Z = (Y; X) stacked.  This
module builds that form as a QuadraticFormSpec, realizes a given (form,
subspace) pair as a linear-quadratic problem, and evaluates the classical
pointwise conditions: surjectivity of the endpoint differential (Gram
matrix), the isotropy condition A_1 = Z^T J Z == 0, and the next-order sign
condition on A_2 = Z^T J Z'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matfun import MatrixFunction, SymplecticForm, stack_rows
from .capacity import build_Aj, predict_capacity, CapacityResult, DEFAULT_TOL
from .galerkin import QuadraticFormSpec, SubspaceSelector

__all__ = [
    "ControlProblemLQ",
    "TripleSpec",
    "ConditionReport",
    "GramInfo",
    "second_variation",
    "realize_lq",
    "gram",
    "goh_check",
    "glc_check",
    "higher_order_report",
    "hessian_bound",
    "gauge_equivalent",
    "compact_part",
]

_GRID = 512


@dataclass
class ControlProblemLQ:
    """Linear-quadratic problem: dynamics B_t u, cost |u|^2/2 + <Omega_t u, x>."""

    B: MatrixFunction
    Omega: MatrixFunction

    def __post_init__(self):
        if self.B.shape != self.Omega.shape:
            raise ValueError("B and Omega must share shape")

    @property
    def Z(self):
        """Stacked (Omega; B) matrix entering the second variation."""
        return stack_rows(self.Omega, self.B)


@dataclass
class TripleSpec:
    """Symplectic space + Lagrangian target + moment map data (Z as (Y; X))."""

    Z: MatrixFunction
    form: SymplecticForm = None

    def __post_init__(self):
        if self.form is None:
            self.form = SymplecticForm(dim=self.Z.rows)
        if self.Z.rows != self.form.dim:
            raise ValueError("Z row count must equal the symplectic dimension")

    @property
    def n(self):
        return self.form.n

    @property
    def Y(self):
        return self.Z.row_block(0, self.n)

    @property
    def X(self):
        return self.Z.row_block(self.n, 2 * self.n)


def second_variation(H: MatrixFunction | None, Z: MatrixFunction) -> QuadraticFormSpec:
    """QuadraticFormSpec of the second variation for data (H, Z).

    The double integral carries the minus sign of the Hessian convention
    (volterra_sign = -1), and the constraint selector sends int Z u dt into
    the vertical subspace, i.e. int X u dt = 0.
    """
    if Z.rows % 2:
        raise ValueError("Z must have an even number of rows (2n)")
    if H is not None and (H.rows != H.cols or H.rows != Z.cols):
        raise ValueError("H must be k-by-k with k = Z.cols")
    return QuadraticFormSpec(
        Z=Z,
        form=SymplecticForm(dim=Z.rows),
        H=H,
        constraint=SubspaceSelector.lagrangian_vertical(Z),
        volterra_sign=-1,
    )


def realize_lq(triple: TripleSpec) -> ControlProblemLQ:
    """LQ problem whose second variation reproduces the triple's form.

    Along the zero extremal control the transport flow is the identity, so
    taking Omega = Y and B = X returns exactly the input Z; row slicing is
    bit-exact on coefficients.
    """
    return ControlProblemLQ(B=triple.X, Omega=triple.Y)


@dataclass
class GramInfo:
    """Controllability Gram matrix with its surjectivity certificate."""

    matrix: np.ndarray
    min_eigenvalue: float
    surjective: bool


def gram(Z: MatrixFunction, t: float, tol: float = 1e-10) -> GramInfo:
    """Gamma_t = int_0^t X X^T dtau for the bottom block X of Z."""
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    if Z.rows % 2:
        raise ValueError("Z must have an even number of rows")
    n = Z.rows // 2
    X = Z.row_block(n, 2 * n)
    G = (X @ X.transpose()).integrate(0.0, t)
    G = 0.5 * (G + G.T)
    mn = float(np.linalg.eigvalsh(G)[0]) if n else 0.0
    return GramInfo(matrix=G, min_eigenvalue=mn, surjective=mn > tol)


@dataclass
class ConditionReport:
    """Outcome of a pointwise optimality-condition check."""

    passed: bool
    name: str
    sup_norm: float = 0.0
    witness_t: float | None = None
    witness_value: float | None = None
    predicted: CapacityResult | None = None

    def to_json_dict(self):
        data = {"pass": bool(self.passed), "name": self.name,
                "sup_norm": float(self.sup_norm)}
        if self.witness_t is not None:
            data["witness_t"] = float(self.witness_t)
        if self.witness_value is not None:
            data["witness_value"] = float(self.witness_value)
        if self.predicted is not None:
            data["predicted"] = self.predicted.to_json_dict()
        return data


def _dense_grid(F: MatrixFunction, npts=_GRID):
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, npts), F.knots]))


def goh_check(Z: MatrixFunction, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Isotropy of the image of Z: A_1 = Z^T J Z must vanish identically.

    When it fails, the quadratic form has eigenvalues of both signs with
    matching first-order asymptotics; the predicted two-sided leading
    coefficient is attached to the report.
    """
    form = SymplecticForm(dim=Z.rows)
    A1 = build_Aj(Z, 1, form)
    ts = _dense_grid(A1)
    vals = np.abs(A1.eval_many(ts)).max(axis=(1, 2))
    sup = max(float(vals.max()), A1.coeff_max())
    if sup <= tol:
        return ConditionReport(passed=True, name="goh", sup_norm=sup)
    widx = int(np.argmax(vals))
    predicted = predict_capacity(Z, form, j_max=1, tol=tol)
    return ConditionReport(passed=False, name="goh", sup_norm=sup,
                           witness_t=float(ts[widx]),
                           witness_value=float(vals[widx]),
                           predicted=predicted)


def glc_check(Z: MatrixFunction, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Sign condition on A_2 = Z^T J Z' once the isotropy condition holds.

    A_2 is symmetric whenever A_1 is constant; the check requires A_1 == 0
    and passes iff A_2(t) is negative semidefinite (largest eigenvalue below
    ``tol``) on a dense grid.
    """
    goh = goh_check(Z, tol)
    if not goh.passed:
        raise ValueError(
            "glc_check requires the isotropy condition A_1 == 0 "
            f"(sup norm {goh.sup_norm:.3e} > tol {tol:g})")
    form = SymplecticForm(dim=Z.rows)
    A2 = build_Aj(Z, 2, form)
    ts = _dense_grid(A2)
    vals = A2.eval_many(ts)
    sym = 0.5 * (vals + vals.transpose(0, 2, 1))
    top = np.linalg.eigvalsh(sym)[:, -1]
    widx = int(np.argmax(top))
    worst = float(top[widx])
    return ConditionReport(passed=worst <= tol, name="glc",
                           sup_norm=float(np.abs(vals).max()),
                           witness_t=float(ts[widx]), witness_value=worst)


def higher_order_report(Z: MatrixFunction, j_max: int = 8,
                        tol: float = DEFAULT_TOL):
    """Experimental sign scan of A_j for j <= j_max.

    Reports, for each even order, the extreme eigenvalues of the symmetric
    part on a grid; certified necessary conditions stop at order 2, higher
    orders are exploratory only.
    """
    form = SymplecticForm(dim=Z.rows)
    out = []
    for j in range(1, j_max + 1):
        Aj = build_Aj(Z, j, form)
        ts = _dense_grid(Aj, npts=128)
        vals = Aj.eval_many(ts)
        sym = 0.5 * (vals + vals.transpose(0, 2, 1))
        ev = np.linalg.eigvalsh(sym)
        out.append({
            "j": j,
            "sup_norm": float(np.abs(vals).max()),
            "max_sym_eig": float(ev[:, -1].max()),
            "min_sym_eig": float(ev[:, 0].min()),
            "certified": j <= 2,
        })
    return out


def _inv_sqrt_neg(Hval, t):
    """(-H)^(-1/2) for a symmetric H(t) that must be negative definite."""
    w, V = np.linalg.eigh(0.5 * (Hval + Hval.T))
    if w[-1] >= 0.0:
        raise ValueError(
            f"H(t) is not negative definite at t={t:.6f} "
            f"(largest eigenvalue {w[-1]:.3e})")
    return (V / np.sqrt(-w)) @ V.T


def compact_part(H: MatrixFunction, Z: MatrixFunction,
                 degree: int | None = None) -> QuadraticFormSpec:
    """Volterra form left after absorbing a strong-Legendre H.

    The substitution v -> (-H)^(-1/2) v turns -int <H v, v> into the plain
    L2 norm and replaces Z by Z (-H)^(-1/2).  For non-constant H the
    transformed matrix leaves the polynomial class, so it is projected back
    with a recorded residual.
    """
    if H.rows != H.cols or H.rows != Z.cols:
        raise ValueError("H must be k-by-k with k = Z.cols")
    form = SymplecticForm(dim=Z.rows)
    if H.degree == 0:
        S = _inv_sqrt_neg(H.eval(0.5), 0.5)
        Zt = Z.right_const(S)
    else:
        if degree is None:
            degree = max(2 * (Z.degree + H.degree) + 4, 24)
        knots = np.union1d(Z.knots, H.knots)

        def fun(t):
            return Z.eval(t) @ _inv_sqrt_neg(H.eval(t), t)

        Zt = MatrixFunction.from_callable(fun, Z.rows, Z.cols,
                                          breakpoints=knots[1:-1],
                                          degree=degree)
    return QuadraticFormSpec(
        Z=Zt, form=form,
        constraint=SubspaceSelector.lagrangian_vertical(Zt),
        volterra_sign=1)


def hessian_bound(Z: MatrixFunction, H: MatrixFunction,
                  grid: int = _GRID):
    """Hessian of the maximized Hamiltonian and the induced capacity bound.

    The Hessian is t -> J Z(t) H(t)^(-1) Z(t)^T J (positive semidefinite for
    negative definite H).  With Zt = Z (-H)^(-1/2) the leading coefficient
    of the compact part obeys

        xi <= (sqrt(k) ||R||_2 / 2) * sqrt(int tr Hess dt),

    where R(t) is the largest singular value of Zt(t); the trace of the
    Hessian equals ||Zt(t)||_F^2 pointwise.  Returns (hessian, bound).
    """
    if H.rows != H.cols or H.rows != Z.cols:
        raise ValueError("H must be k-by-k with k = Z.cols")
    form = SymplecticForm(dim=Z.rows)
    J = form.matrix
    if H.degree == 0:
        Hinv = np.linalg.inv(H.eval(0.5))
        # J Z Hinv Z^T J, assembled as (J Z Hinv) @ (Z^T J), exact polynomials
        hessian = Z.left_const(J).right_const(Hinv) @ Z.transpose().right_const(J)
    else:
        knots = np.union1d(Z.knots, H.knots)

        def fun(t):
            return J @ Z.eval(t) @ np.linalg.inv(H.eval(t)) @ Z.eval(t).T @ J

        hessian = MatrixFunction.from_callable(
            fun, Z.rows, Z.rows, breakpoints=knots[1:-1],
            degree=max(2 * (Z.degree + H.degree) + 4, 24))
    # quadrature on a Gauss grid per piece for the two scalar integrals
    import numpy.polynomial.legendre as npleg
    knots = np.union1d(Z.knots, H.knots)
    q = max(grid // max(len(knots) - 1, 1), 64)
    x, w = npleg.leggauss(q)
    int_trace = 0.0
    int_R2 = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        half = 0.5 * (hi - lo)
        ts = 0.5 * (lo + hi) + half * x
        Zv = Z.eval_many(ts)
        Hv = H.eval_many(ts)
        for tval, zv, hv, wv in zip(ts, Zv, Hv, w):
            S = _inv_sqrt_neg(hv, tval)
            Ztil = zv @ S
            sv = np.linalg.svd(Ztil, compute_uv=False)
            int_trace += half * wv * float(np.sum(sv ** 2))
            int_R2 += half * wv * float(sv[0] ** 2)
    k = Z.cols
    bound = 0.5 * math.sqrt(k) * math.sqrt(int_R2) * math.sqrt(int_trace)
    return hessian, bound


def gauge_equivalent(Z1: MatrixFunction, Z2: MatrixFunction,
                     tol: float = 1e-9, grid: int = 64) -> bool:
    """Whether Z1 and Z2 induce the same Volterra kernel Z(t)^T J Z(tau).

    Two stacked matrices (Y; X) with the same X agree exactly when
    Y2 - Y1 = G X with G symmetric; operationally the kernels are compared
    on a 2-D grid.
    """
    if Z1.shape != Z2.shape:
        raise ValueError("shapes differ")
    form = SymplecticForm(dim=Z1.rows)
    from .galerkin import kernel_on_grid
    ts = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid),
                                   Z1.knots, Z2.knots]))
    V1 = kernel_on_grid(Z1, form, ts, ts)
    V2 = kernel_on_grid(Z2, form, ts, ts)
    scale = max(float(np.abs(V1).max()), float(np.abs(V2).max()), 1.0)
    return bool(np.abs(V1 - V2).max() <= tol * scale)
