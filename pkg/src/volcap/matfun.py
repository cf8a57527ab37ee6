"""Piecewise-polynomial matrix-valued functions on [0, 1].

Every function is stored as a partition of [0, 1] into pieces, each piece
carrying a Legendre-coefficient tensor in the local coordinate
x = (2t - lo - hi) / (hi - lo).  Differentiation, integration, products and
restriction to sub-intervals are all exact coefficient operations, so the
downstream spectral algebra never re-approximates anything that started out
polynomial.  Non-polynomial inputs are admitted only through projection at
construction time; the projection residual is recorded on the object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.legendre as npleg

__all__ = [
    "MatrixFunction",
    "SymplecticForm",
    "sandwich",
    "stack_rows",
]

# Knots closer than this are considered identical when merging partitions.
_KNOT_TOL = 1e-13


def _merge_knots(a, b):
    knots = np.union1d(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    keep = [knots[0]]
    for x in knots[1:]:
        if x - keep[-1] > _KNOT_TOL:
            keep.append(x)
    keep[-1] = max(keep[-1], knots[-1])
    return np.array(keep)


def _project_samples(x, w, values, deg):
    """Legendre coefficients (deg+1, ...) from samples on Gauss nodes x."""
    van = npleg.legvander(x, deg)                      # (q, deg+1)
    scale = (2.0 * np.arange(deg + 1) + 1.0) / 2.0
    flat = values.reshape(len(x), -1)
    coeffs = (van * w[:, None]).T @ flat               # (deg+1, m)
    coeffs *= scale[:, None]
    return coeffs.reshape((deg + 1,) + values.shape[1:])


class MatrixFunction:
    """Matrix-valued piecewise polynomial on [0, 1].

    Parameters
    ----------
    knots : array_like
        Full sorted partition 0 = t_0 < t_1 < ... < t_P = 1.
    coeffs : list of ndarray
        One tensor per piece, shape (deg_p + 1, rows, cols): Legendre
        coefficients in the local coordinate of that piece.

    Values are immutable after construction.  Evaluation at an interior knot
    follows the right-limit convention (the piece on the right wins).
    """

    def __init__(self, knots, coeffs, projection_residual=0.0):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 1 or len(knots) < 2:
            raise ValueError("knots must contain at least [0, 1]")
        if abs(knots[0]) > _KNOT_TOL or abs(knots[-1] - 1.0) > _KNOT_TOL:
            raise ValueError("domain must be [0, 1]")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if len(coeffs) != len(knots) - 1:
            raise ValueError("need one coefficient tensor per piece")
        shapes = {c.shape[1:] for c in coeffs}
        if len(shapes) != 1:
            raise ValueError("all pieces must share the matrix shape")
        knots = knots.copy()
        knots[0], knots[-1] = 0.0, 1.0
        self.knots = knots
        self.coeffs = [np.ascontiguousarray(c, dtype=float) for c in coeffs]
        for c in self.coeffs:
            c.flags.writeable = False
        self.knots.flags.writeable = False
        self.rows, self.cols = self.coeffs[0].shape[1:]
        self.projection_residual = float(projection_residual)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls([0.0, 1.0], [matrix[None, :, :].copy()])

    @classmethod
    def zero(cls, rows, cols, breakpoints=()):
        knots = _full_knots(breakpoints)
        return cls(knots, [np.zeros((1, rows, cols)) for _ in range(len(knots) - 1)])

    @classmethod
    def from_callable(cls, fun, rows, cols, breakpoints=(), degree=16, grid=200):
        """Project a callable t -> (rows, cols) array onto the basis.

        The projection residual (max abs deviation on a dense per-piece grid)
        is recorded; it is ~1e-15 whenever ``fun`` is itself a polynomial of
        degree <= ``degree`` on every piece.
        """
        knots = _full_knots(breakpoints)
        x, w = npleg.leggauss(max(2 * (degree + 1), 48))
        coeffs = []
        residual = 0.0
        for lo, hi in zip(knots[:-1], knots[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            ts = mid + half * x
            vals = np.stack([np.asarray(fun(t), dtype=float).reshape(rows, cols)
                             for t in ts])
            c = _project_samples(x, w, vals, degree)
            coeffs.append(c)
            tg = np.linspace(lo, hi, grid)
            approx = npleg.legval((tg - mid) / half, c)      # (rows, cols, grid)
            exact = np.stack([np.asarray(fun(t), dtype=float).reshape(rows, cols)
                              for t in tg], axis=-1)
            residual = max(residual, float(np.max(np.abs(approx - exact))))
        return cls(knots, coeffs, projection_residual=residual)

    @classmethod
    def from_entries(cls, entries, breakpoints=()):
        """Exact construction from power-basis coefficients in global t.

        ``entries[i][j]`` is either a scalar or a sequence of power
        coefficients (c0, c1, ...) meaning c0 + c1 t + c2 t**2 + ...
        """
        entries = [[np.atleast_1d(np.asarray(e, dtype=float)) for e in row]
                   for row in entries]
        rows, cols = len(entries), len(entries[0])
        deg = max(len(e) - 1 for row in entries for e in row)
        knots = _full_knots(breakpoints)
        coeffs = []
        for lo, hi in zip(knots[:-1], knots[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            c = np.zeros((deg + 1, rows, cols))
            for i, row in enumerate(entries):
                for j, e in enumerate(row):
                    # substitute t = mid + half * x, then convert to Legendre
                    p = np.polynomial.Polynomial(e)(
                        np.polynomial.Polynomial([mid, half]))
                    lc = npleg.poly2leg(p.coef)
                    c[: len(lc), i, j] = lc
            coeffs.append(c)
        return cls(knots, coeffs)

    # -- basic queries -----------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def breakpoints(self):
        """Interior knots only."""
        return self.knots[1:-1]

    @property
    def degree(self):
        return max(c.shape[0] - 1 for c in self.coeffs)

    def piece_index(self, t):
        idx = int(np.searchsorted(self.knots, t, side="right")) - 1
        return min(max(idx, 0), len(self.coeffs) - 1)

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        t = float(t)
        if t < -_KNOT_TOL or t > 1.0 + _KNOT_TOL:
            raise ValueError(f"t={t} outside the domain [0, 1]")
        p = self.piece_index(t)
        lo, hi = self.knots[p], self.knots[p + 1]
        x = (2.0 * t - lo - hi) / (hi - lo)
        return npleg.legval(x, self.coeffs[p])

    def eval_many(self, ts):
        """Vectorised evaluation, result shape (len(ts), rows, cols)."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < -_KNOT_TOL) or np.any(ts > 1.0 + _KNOT_TOL):
            raise ValueError("some evaluation points fall outside [0, 1]")
        out = np.empty(ts.shape + (self.rows, self.cols))
        idx = np.clip(np.searchsorted(self.knots, ts, side="right") - 1,
                      0, len(self.coeffs) - 1)
        for p in np.unique(idx):
            lo, hi = self.knots[p], self.knots[p + 1]
            sel = idx == p
            x = (2.0 * ts[sel] - lo - hi) / (hi - lo)
            out[sel] = np.moveaxis(npleg.legval(x, self.coeffs[p]), -1, 0)
        return out

    # -- calculus ----------------------------------------------------------

    def derivative(self, order=1):
        """Exact derivative; orders beyond the degree give the zero function."""
        if order < 0:
            raise ValueError("order must be >= 0")
        if order == 0:
            return self
        coeffs = []
        for (lo, hi), c in zip(zip(self.knots[:-1], self.knots[1:]), self.coeffs):
            half = 0.5 * (hi - lo)
            if order >= c.shape[0]:
                coeffs.append(np.zeros((1, self.rows, self.cols)))
            else:
                coeffs.append(npleg.legder(c, m=order, scl=1.0 / half, axis=0))
        return MatrixFunction(self.knots, coeffs)

    def antiderivative(self):
        """F with F' = self and F(0) = 0; knots unchanged, degree + 1."""
        coeffs = []
        acc = np.zeros((self.rows, self.cols))
        for (lo, hi), c in zip(zip(self.knots[:-1], self.knots[1:]), self.coeffs):
            half = 0.5 * (hi - lo)
            g = npleg.legint(c, m=1, lbnd=-1, scl=half, axis=0)
            g = g.copy()
            g[0] += acc
            acc = npleg.legval(1.0, g)
            coeffs.append(g)
        return MatrixFunction(self.knots, coeffs)

    def integrate(self, a=0.0, b=1.0):
        """Exact integral over [a, b] as a (rows, cols) matrix."""
        if a > b:
            raise ValueError(f"integration bounds out of order: a={a} > b={b}")
        if a < -_KNOT_TOL or b > 1.0 + _KNOT_TOL:
            raise ValueError("integration bounds must lie inside [0, 1]")
        total = np.zeros((self.rows, self.cols))
        for (lo, hi), c in zip(zip(self.knots[:-1], self.knots[1:]), self.coeffs):
            aa, bb = max(a, lo), min(b, hi)
            if bb <= aa:
                continue
            half = 0.5 * (hi - lo)
            if aa == lo and bb == hi:
                total += (hi - lo) * c[0]
                continue
            g = npleg.legint(c, m=1, lbnd=-1, scl=half, axis=0)
            xa = (2.0 * aa - lo - hi) / (hi - lo)
            xb = (2.0 * bb - lo - hi) / (hi - lo)
            total += npleg.legval(xb, g) - npleg.legval(xa, g)
        return total

    # -- algebra -----------------------------------------------------------

    def with_knots(self, new_knots):
        """Re-expand on a refinement of the partition (exact for polynomials)."""
        new_knots = _merge_knots(self.knots, new_knots)
        if np.array_equal(new_knots, self.knots):
            return self
        coeffs = []
        for lo, hi in zip(new_knots[:-1], new_knots[1:]):
            p = self.piece_index(0.5 * (lo + hi))
            slo, shi = self.knots[p], self.knots[p + 1]
            deg = self.coeffs[p].shape[0] - 1
            x, w = npleg.leggauss(deg + 1)
            ts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            xs = (2.0 * ts - slo - shi) / (shi - slo)
            vals = np.moveaxis(npleg.legval(xs, self.coeffs[p]), -1, 0)
            coeffs.append(_project_samples(x, w, vals, deg))
        return MatrixFunction(new_knots, coeffs)

    def _aligned(self, other):
        knots = _merge_knots(self.knots, other.knots)
        return self.with_knots(knots), other.with_knots(knots)

    def __add__(self, other):
        if not isinstance(other, MatrixFunction):
            return NotImplemented
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        a, b = self._aligned(other)
        coeffs = []
        for ca, cb in zip(a.coeffs, b.coeffs):
            deg = max(ca.shape[0], cb.shape[0])
            c = np.zeros((deg, self.rows, self.cols))
            c[: ca.shape[0]] += ca
            c[: cb.shape[0]] += cb
            coeffs.append(c)
        return MatrixFunction(a.knots, coeffs)

    def __neg__(self):
        return MatrixFunction(self.knots, [-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, MatrixFunction):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return MatrixFunction(self.knots, [float(scalar) * c for c in self.coeffs])

    __rmul__ = __mul__

    def transpose(self):
        return MatrixFunction(self.knots, [c.transpose(0, 2, 1) for c in self.coeffs])

    @property
    def T(self):
        return self.transpose()

    def left_const(self, matrix):
        """t -> matrix @ self(t), matrix constant."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[1] != self.rows:
            raise ValueError("constant factor has incompatible shape")
        return MatrixFunction(
            self.knots,
            [np.einsum("ij,djc->dic", matrix, c) for c in self.coeffs])

    def right_const(self, matrix):
        """t -> self(t) @ matrix, matrix constant."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] != self.cols:
            raise ValueError("constant factor has incompatible shape")
        return MatrixFunction(
            self.knots,
            [np.einsum("drj,jc->drc", c, matrix) for c in self.coeffs])

    def matmul(self, other):
        """Pointwise matrix product, exact in coefficient space."""
        if self.cols != other.rows:
            raise ValueError(
                f"matmul shape mismatch {self.shape} @ {other.shape}")
        a, b = self._aligned(other)
        coeffs = []
        for ca, cb in zip(a.coeffs, b.coeffs):
            da, db = ca.shape[0] - 1, cb.shape[0] - 1
            out = np.zeros((da + db + 1, self.rows, other.cols))
            for i in range(self.rows):
                for j in range(other.cols):
                    acc = np.zeros(da + db + 1)
                    for l in range(self.cols):
                        prod = npleg.legmul(ca[:, i, l], cb[:, l, j])
                        acc[: len(prod)] += prod
                    out[:, i, j] = acc
            coeffs.append(out)
        return MatrixFunction(a.knots, coeffs)

    def __matmul__(self, other):
        return self.matmul(other)

    def row_block(self, i0, i1):
        """Rows i0:i1 as a new function; coefficient slices are bit-exact."""
        return MatrixFunction(self.knots, [c[:, i0:i1, :] for c in self.coeffs],
                              projection_residual=self.projection_residual)

    # -- norms and diagnostics ----------------------------------------------

    def coeff_max(self):
        return max(float(np.max(np.abs(c))) for c in self.coeffs)

    def sup_norm(self, grid=256):
        """Max abs entry over a dense grid (plus all knots)."""
        ts = np.union1d(np.linspace(0.0, 1.0, grid), self.knots)
        return float(np.max(np.abs(self.eval_many(ts))))

    def l2_gram(self):
        """Matrix of pairwise L2 inner products of the rows."""
        return (self @ self.transpose()).integrate()

    # -- serialization -------------------------------------------------------

    def to_json_dict(self):
        pieces = []
        for (lo, hi), c in zip(zip(self.knots[:-1], self.knots[1:]), self.coeffs):
            pieces.append({
                "interval": [float(lo), float(hi)],
                "coeffs": [[[float(v) for v in c[:, i, j]]
                            for j in range(self.cols)]
                           for i in range(self.rows)],
            })
        return {
            "rows": self.rows,
            "cols": self.cols,
            "breakpoints": [float(t) for t in self.breakpoints],
            "pieces": pieces,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json_dict(cls, data):
        rows, cols = data["rows"], data["cols"]
        knots = [0.0] + [float(t) for t in data["breakpoints"]] + [1.0]
        coeffs = []
        for piece in data["pieces"]:
            entry = piece["coeffs"]
            deg = max(len(entry[i][j]) for i in range(rows) for j in range(cols))
            c = np.zeros((deg, rows, cols))
            for i in range(rows):
                for j in range(cols):
                    vals = entry[i][j]
                    c[: len(vals), i, j] = vals
            coeffs.append(c)
        return cls(knots, coeffs)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))

    def __repr__(self):
        return (f"MatrixFunction({self.rows}x{self.cols}, "
                f"pieces={len(self.coeffs)}, degree={self.degree})")


def _full_knots(breakpoints):
    pts = sorted(float(b) for b in breakpoints)
    if any(not 0.0 < b < 1.0 for b in pts):
        raise ValueError("breakpoints must be interior to (0, 1)")
    return np.array([0.0] + pts + [1.0])


@dataclass(frozen=True)
class SymplecticForm:
    """Standard symplectic structure on R^(2n): J = [[0, -I], [I, 0]]."""

    dim: int

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise ValueError("symplectic dimension must be a positive even number")

    @classmethod
    def standard(cls, n):
        return cls(dim=2 * n)

    @property
    def n(self):
        return self.dim // 2

    @property
    def matrix(self):
        n = self.n
        J = np.zeros((self.dim, self.dim))
        J[:n, n:] = -np.eye(n)
        J[n:, :n] = np.eye(n)
        return J

    def apply(self, x, y):
        """sigma(x, y) = <Jx, y>."""
        return float(np.dot(self.matrix @ np.asarray(x), np.asarray(y)))


def sandwich(A, form, B):
    """t -> A(t)^T J B(t) for a symplectic form (or plain matrix) J."""
    J = form.matrix if isinstance(form, SymplecticForm) else np.asarray(form)
    if A.rows != J.shape[0] or B.rows != J.shape[1]:
        raise ValueError(
            f"sandwich shape mismatch: A has {A.rows} rows, B has {B.rows}, "
            f"form is {J.shape[0]}x{J.shape[1]}")
    return A.transpose() @ B.left_const(J)


def stack_rows(top, bottom):
    """Vertical concatenation [top; bottom] with merged breakpoints."""
    if top.cols != bottom.cols:
        raise ValueError("column counts differ")
    a, b = top._aligned(bottom)
    coeffs = []
    for ca, cb in zip(a.coeffs, b.coeffs):
        deg = max(ca.shape[0], cb.shape[0])
        c = np.zeros((deg, top.rows + bottom.rows, top.cols))
        c[: ca.shape[0], : top.rows, :] = ca
        c[: cb.shape[0], top.rows:, :] = cb
        coeffs.append(c)
    return MatrixFunction(a.knots, coeffs)
