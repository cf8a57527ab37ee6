"""Galerkin discretization of the Volterra quadratic form.

The form

    Q(v) = int_0^1 int_0^t < Z_t v(t), J Z_tau v(tau) > dtau dt  -  int <H_t v, v>

is discretized on the orthonormal basis e_(c,i)(t) = phi_i(t) eps_c of
L^2([0,1], R^k), where phi_i is the normalized shifted Legendre polynomial of
degree i and eps_c a coordinate vector.  Flattened indices are
component-major: a = c * N + i.

Assembly is exact up to roundoff: the inner integral over tau is an exact
Legendre antiderivative per piece (this resolves the kernel discontinuity
across the diagonal), and the outer Gauss rule has enough nodes for the
polynomial degree at hand, so no quadrature convergence loop is needed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.legendre as npleg
import scipy.linalg

from .matfun import MatrixFunction, SymplecticForm, _merge_knots

__all__ = [
    "QuadraticFormSpec",
    "SubspaceSelector",
    "SpectrumResult",
    "SkewFactorization",
    "RestrictedForm",
    "assemble",
    "restrict",
    "spectrum",
    "skew_factorize",
    "capacity_bound",
    "solve",
    "kernel_on_grid",
    "kernel_hs_norm",
]

DEFAULT_N = 256
#: eigenvalue indices above N/RELIABLE_FACTOR are treated as unconverged
RELIABLE_FACTOR = 6
_SIGN_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SubspaceSelector:
    """Finite-codimension constraint subspace for the symmetrizing restriction.

    kind "none"    : no restriction.
    kind "moment"  : v_l(1) = 0 for 0 < l <= count, componentwise, realized as
                     int (1-t)^(l-1)/(l-1)! v(t) dt = 0.
    kind "custom"  : explicit functionals v -> int g(t) v(t) dt given as 1-by-k
                     matrix functions g.
    """

    kind: str = "none"
    count: int = 0
    functionals: tuple = ()

    @classmethod
    def none(cls):
        return cls(kind="none")

    @classmethod
    def moments(cls, count):
        if count < 1:
            raise ValueError("moment selector needs count >= 1")
        return cls(kind="moment", count=int(count))

    @classmethod
    def custom(cls, functionals):
        functionals = tuple(functionals)
        for g in functionals:
            if g.rows != 1:
                raise ValueError("custom functionals must be 1-by-k functions")
        return cls(kind="custom", functionals=functionals)

    @classmethod
    def lagrangian_vertical(cls, Z):
        """Constraints sending int Z v dt into the vertical subspace {(p, 0)}.

        Kills the integrals against the bottom half of Z's rows, which makes
        the discretized form symmetric for every Z.
        """
        if Z.rows % 2:
            raise ValueError("Z must have an even number of rows")
        n = Z.rows // 2
        return cls.custom(tuple(Z.row_block(n + i, n + i + 1) for i in range(n)))

    @property
    def is_none(self):
        return self.kind == "none"


@dataclass
class QuadraticFormSpec:
    """Data of the quadratic form: (Z, optional H, symplectic form, constraint).

    ``volterra_sign`` switches between the +Volterra convention above (+1,
    the default) and the second-variation convention, where the double
    integral enters with a minus sign (-1).
    """

    Z: MatrixFunction
    form: SymplecticForm
    H: MatrixFunction | None = None
    constraint: SubspaceSelector = field(default_factory=SubspaceSelector.none)
    volterra_sign: int = 1

    def __post_init__(self):
        if self.Z.rows != self.form.dim:
            raise ValueError(
                f"Z has {self.Z.rows} rows, symplectic dimension is {self.form.dim}")
        if self.H is not None:
            if self.H.rows != self.H.cols or self.H.rows != self.Z.cols:
                raise ValueError("H must be k-by-k with k = Z.cols")
        if self.volterra_sign not in (-1, 1):
            raise ValueError("volterra_sign must be +1 or -1")

    @property
    def k(self):
        return self.Z.cols


def _basis_norms(N):
    return np.sqrt(2.0 * np.arange(N) + 1.0)


def _basis_values(ts, N):
    """phi_i(t) for the orthonormal shifted Legendre basis, shape (len, N)."""
    return npleg.legvander(2.0 * np.asarray(ts) - 1.0, N - 1) * _basis_norms(N)


def assemble(spec: QuadraticFormSpec, N: int) -> np.ndarray:
    """Galerkin matrix M[a, b] = <e_a, K e_b> (minus the H term) of size N*k.

    The inner tau-integral is carried as an exact running antiderivative in
    Legendre coefficients, the outer t-integral by Gauss rules sized to the
    exact polynomial degree, so entries are exact up to roundoff.
    """
    if N < 4:
        raise ValueError("basis size N must be >= 4")
    Z, H = spec.Z, spec.H
    twon, k = Z.rows, Z.cols
    J = spec.form.matrix
    knots = Z.knots if H is None else _merge_knots(Z.knots, H.knots)
    Dz = Z.degree
    q = N + Dz + 4
    x, w = npleg.leggauss(q)
    deg_loc = N + Dz + 1
    scale = (2.0 * np.arange(deg_loc + 1) + 1.0) / 2.0

    M4 = np.zeros((k, N, k, N))
    accum = np.zeros((k, twon, N))
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        ts = mid + half * x
        w_t = w * half
        Zt = Z.eval_many(ts)                            # (q, 2n, k)
        Phi = _basis_values(ts, N)                      # (q, N)
        PhiW = Phi * w_t[:, None]
        Vloc = npleg.legvander(x, deg_loc)              # (q, deg+1)
        proj = (Vloc * w[:, None]).T * scale[:, None]   # (deg+1, q)
        ZJ = np.matmul(Zt.transpose(0, 2, 1), J)        # (q, k, 2n)
        for d in range(k):
            F = Zt[:, :, d][:, :, None] * Phi[:, None, :]      # (q, 2n, N)
            C = (proj @ F.reshape(q, -1)).reshape(deg_loc + 1, twon, N)
            anti = npleg.legint(C, m=1, lbnd=-1, scl=half, axis=0)
            anti[0] += accum[d]
            G = np.moveaxis(npleg.legval(x, anti), -1, 0)      # (q, 2n, N)
            accum[d] = npleg.legval(1.0, anti)
            T = np.matmul(ZJ, G)                               # (q, k, N)
            R = (PhiW.T @ T.reshape(q, -1)).reshape(N, k, N)
            M4[:, :, d, :] += spec.volterra_sign * R.transpose(1, 0, 2)
        if H is not None:
            Ht = H.eval_many(ts)                               # (q, k, k)
            for c in range(k):
                for d in range(k):
                    M4[c, :, d, :] -= (Phi * (w_t * Ht[:, d, c])[:, None]).T @ Phi
    return M4.reshape(N * k, N * k)


# -- restriction -------------------------------------------------------------


def _moment_row_coeffs(l, N):
    """Basis coefficients of int_0^1 (1-t)^(l-1)/(l-1)! phi_i(t) dt."""
    p = np.polynomial.Polynomial([1.0, -1.0]) ** (l - 1) / math.factorial(l - 1)
    # substitute t = (x + 1)/2 and expand in Legendre
    px = p(np.polynomial.Polynomial([0.5, 0.5]))
    gl = npleg.poly2leg(px.coef)
    row = np.zeros(N)
    m = min(len(gl), N)
    row[:m] = gl[:m] / _basis_norms(N)[:m]
    return row


def _functional_row(g: MatrixFunction, N):
    """Row of int g(t)^T... coefficients for a 1-by-k functional g."""
    k = g.cols
    row = np.zeros(k * N)
    q = (N + g.degree) // 2 + 2
    x, w = npleg.leggauss(q)
    for lo, hi in zip(g.knots[:-1], g.knots[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        ts = mid + half * x
        gv = g.eval_many(ts)[:, 0, :]                   # (q, k)
        Phi = _basis_values(ts, N) * (w * half)[:, None]
        for c in range(k):
            row[c * N:(c + 1) * N] += gv[:, c] @ Phi
    return row


def constraint_matrix(selector: SubspaceSelector, N: int, k: int):
    """Stacked constraint rows in the flattened basis, or None for 'none'."""
    if selector.is_none:
        return None
    rows = []
    if selector.kind == "moment":
        for l in range(1, selector.count + 1):
            base = _moment_row_coeffs(l, N)
            for c in range(k):
                row = np.zeros(k * N)
                row[c * N:(c + 1) * N] = base
                rows.append(row)
    elif selector.kind == "custom":
        for g in selector.functionals:
            if g.cols != k:
                raise ValueError("functional has wrong component count")
            rows.append(_functional_row(g, N))
    else:
        raise ValueError(f"unknown selector kind {selector.kind!r}")
    return np.array(rows)


@dataclass
class RestrictedForm:
    """Constraint-projected, symmetrized Galerkin matrix plus diagnostics."""

    matrix: np.ndarray
    basis: np.ndarray | None
    asymmetry_residual: float
    codim: int
    constraint_rank: int
    N: int | None = None


def restrict(M: np.ndarray, selector: SubspaceSelector, N: int) -> RestrictedForm:
    """Project M onto the discrete constraint null-space and symmetrize.

    The skew norm of the projected matrix before symmetrization is recorded;
    for a selector landing int Z v dt in a Lagrangian subspace it sits at
    roundoff level.  Constraint rank deficiency is reported, not fatal.
    """
    size = M.shape[0]
    k = size // N
    C = constraint_matrix(selector, N, k)
    if C is None:
        residual = float(np.linalg.norm(0.5 * (M - M.T)))
        return RestrictedForm(matrix=M, basis=None, asymmetry_residual=residual,
                              codim=0, constraint_rank=0, N=N)
    u, sv, vt = np.linalg.svd(C, full_matrices=True)
    cutoff = max(C.shape) * np.finfo(float).eps * (sv[0] if len(sv) else 0.0)
    rank = int(np.sum(sv > cutoff))
    if rank < len(C):
        warnings.warn(
            f"constraint rank {rank} < {len(C)} rows; redundant functionals",
            stacklevel=2)
    basis = vt[rank:].T                                  # (size, size - rank)
    proj = basis.T @ M @ basis
    residual = float(np.linalg.norm(0.5 * (proj - proj.T)))
    return RestrictedForm(matrix=0.5 * (proj + proj.T), basis=basis,
                          asymmetry_residual=residual, codim=rank,
                          constraint_rank=rank, N=N)


# -- spectra -----------------------------------------------------------------


@dataclass
class SpectrumResult:
    """Signed monotone arrangements of a discrete symmetric spectrum.

    ``positive`` is nonincreasing (lambda_1 >= lambda_2 >= ...), ``negative``
    is nondecreasing starting from the most negative entry
    (lambda_-1 <= lambda_-2 <= ...), each with multiplicity.
    """

    positive: np.ndarray
    negative: np.ndarray
    asymmetry_residual: float = 0.0
    discretization: int | None = None

    def lam(self, n):
        """Eigenvalue by signed index n in Z \\ {0}."""
        if n == 0:
            raise IndexError("indices start at +/-1")
        return self.positive[n - 1] if n > 0 else self.negative[-n - 1]

    @property
    def n_positive(self):
        return len(self.positive)

    @property
    def n_negative(self):
        return len(self.negative)

    def scaled(self, a):
        """Spectrum of a*Q: every eigenvalue multiplied by a > 0."""
        if a <= 0:
            raise ValueError("scaling must be positive")
        return SpectrumResult(positive=a * self.positive,
                              negative=a * self.negative,
                              asymmetry_residual=self.asymmetry_residual,
                              discretization=self.discretization)

    def to_json_dict(self, provenance="computed"):
        return {
            "positive": [float(v) for v in self.positive],
            "negative": [float(v) for v in self.negative],
            "asymmetry_residual": float(self.asymmetry_residual),
            "discretization": self.discretization,
            "provenance": provenance,
        }

    def csv_rows(self, limit=None):
        """(n, lambda_n) rows, positive indices first, then negative."""
        npos = self.n_positive if limit is None else min(limit, self.n_positive)
        nneg = self.n_negative if limit is None else min(limit, self.n_negative)
        rows = [(i + 1, float(self.positive[i])) for i in range(npos)]
        rows += [(-(i + 1), float(self.negative[i])) for i in range(nneg)]
        return rows


def spectrum(M) -> SpectrumResult:
    """Eigendecomposition of a (restricted) Galerkin matrix, split by sign.

    Eigenvalues with magnitude below 1e-12 * ||M|| are numerical nulls of the
    constraint projection and are dropped.
    """
    residual = 0.0
    discretization = None
    if isinstance(M, RestrictedForm):
        residual = M.asymmetry_residual
        discretization = M.N
        M = M.matrix
    M = np.asarray(M, dtype=float)
    skew = np.linalg.norm(0.5 * (M - M.T))
    scale = np.linalg.norm(M)
    if scale > 0 and skew / scale > 1e-6:
        raise ValueError(
            f"matrix is not symmetric within tolerance (skew fraction "
            f"{skew / scale:.2e}); restrict to a symmetrizing subspace first")
    evals = np.linalg.eigvalsh(0.5 * (M + M.T))
    if len(evals) == 0:
        thr = 0.0
    else:
        thr = _SIGN_THRESHOLD * float(np.max(np.abs(evals)))
    pos = np.sort(evals[evals > thr])[::-1]
    neg = np.sort(evals[evals < -thr])
    return SpectrumResult(positive=pos, negative=neg,
                          asymmetry_residual=residual,
                          discretization=discretization)


def solve(spec: QuadraticFormSpec, N: int = DEFAULT_N) -> SpectrumResult:
    """assemble -> restrict (by the spec's own selector) -> spectrum."""
    M = assemble(spec, N)
    return spectrum(restrict(M, spec.constraint, N))


# -- skew part factorization ---------------------------------------------------


@dataclass
class SkewFactorization:
    """Canonical factorization of the finite-rank skew part.

    The kernel of the skew part is 0.5 * frame(t)^T A_amp frame(tau) with
    ``frame`` row-orthonormal in L^2 and A_amp block diagonal with blocks
    [[0, s_i], [-s_i, 0]].  Rescaling the paired rows by sqrt(2 s_i) yields
    ``scaled_frame`` with the canonical matrix A0 = [[0, -I], [I, 0]]; the
    operator kernel is then  0.5 * scaled_frame(t)^T A0 scaled_frame(tau),
    and the reconstructed Volterra kernel is twice that on tau < t.
    """

    rank: int
    A0: np.ndarray
    frame: MatrixFunction | None
    scaled_frame: MatrixFunction | None
    skew_eigs: np.ndarray
    reconstruction_error: float
    kernel_norm: float
    discretization: int
    tol_used: float

    @property
    def m(self):
        return self.rank // 2

    def to_json_dict(self, provenance="computed"):
        return {
            "rank": self.rank,
            "A0": [[float(v) for v in row] for row in self.A0],
            "skew_eigs": [float(s) for s in self.skew_eigs],
            "reconstruction_error": float(self.reconstruction_error),
            "kernel_norm": float(self.kernel_norm),
            "discretization": self.discretization,
            "tol_used": float(self.tol_used),
            "frame": None if self.frame is None else self.frame.to_json_dict(),
            "provenance": provenance,
        }


def _coeff_vector_to_function(vectors, N, k):
    """Columns of ``vectors`` (size N*k) as rows of a single-piece function."""
    nfun = vectors.shape[1]
    norms = _basis_norms(N)
    coeffs = np.zeros((N, nfun, k))
    for c in range(k):
        block = vectors[c * N:(c + 1) * N, :]           # (N, nfun)
        coeffs[:, :, c] = block * norms[:, None]
    return MatrixFunction([0.0, 1.0], [coeffs])


def skew_factorize(spec: QuadraticFormSpec, N: int = DEFAULT_N,
                   tol: float = 1e-10) -> SkewFactorization:
    """Extract and canonicalize the skew part of the discretized operator.

    Numerical rank comes from the singular values of the skew matrix (above
    tol * sigma_max).  Skew ranks are even; an odd count signals a
    misconfigured tolerance, in which case tol is raised tenfold once before
    giving up.  The frame is read off the real Schur form, whose 2x2 blocks
    carry the amplitudes s_i (eigenvalues +/- i s_i).
    """
    if spec.H is not None:
        raise ValueError("skew_factorize expects the pure Volterra part (no H)")
    if N <= spec.Z.degree:
        raise ValueError("basis size N must exceed the degree of Z")
    k = spec.k
    M = assemble(spec, N)
    A = 0.5 * (M - M.T)
    sv = np.linalg.svd(A, compute_uv=False)
    smax = sv[0] if len(sv) else 0.0
    tol_used = tol
    if smax <= 0.0:
        rank = 0
    else:
        rank = int(np.sum(sv > tol_used * smax))
        if rank % 2:
            tol_used *= 10.0
            rank = int(np.sum(sv > tol_used * smax))
            if rank % 2:
                raise RuntimeError(
                    f"odd numerical skew rank {rank} persists after raising tol "
                    f"to {tol_used:g}; singular values near the cut: "
                    f"{sv[max(rank - 2, 0):rank + 2]}")
    # The kernels of both the original and the rebuilt operator sit inside the
    # Galerkin span, so HS norms over the triangle equal sqrt(2) * Frobenius
    # norms of the discrete skew matrices (Parseval).
    norm_kernel = math.sqrt(2.0) * float(np.linalg.norm(A))
    if rank == 0:
        return SkewFactorization(
            rank=0, A0=np.zeros((0, 0)), frame=None, scaled_frame=None,
            skew_eigs=np.zeros(0), reconstruction_error=norm_kernel,
            kernel_norm=norm_kernel, discretization=N, tol_used=tol_used)
    m = rank // 2
    T, W = scipy.linalg.schur(A, output="real")
    blocks = []
    p = 0
    size = A.shape[0]
    while p < size - 1:
        s = T[p, p + 1]
        if abs(s) > 0.0 and abs(T[p + 1, p]) > 0.0:
            blocks.append((abs(s), p, s > 0))
            p += 2
        else:
            p += 1
    blocks.sort(key=lambda b: -b[0])
    if len(blocks) < m:
        raise RuntimeError("Schur form yielded fewer blocks than the rank/2")
    us, vs, amps = [], [], []
    for s_abs, p, positive in blocks[:m]:
        u, v = W[:, p], W[:, p + 1]
        if not positive:
            u, v = v, u
        us.append(u)
        vs.append(v)
        amps.append(s_abs)
    amps = np.array(amps)
    # rows ordered (y_1..y_m, x_1..x_m): y from v-vectors, x from u-vectors
    frame_vecs = np.column_stack(vs + us)
    frame = _coeff_vector_to_function(frame_vecs, N, k)
    scaled_vecs = frame_vecs * np.sqrt(2.0 * np.concatenate([amps, amps]))
    scaled_frame = _coeff_vector_to_function(scaled_vecs, N, k)
    A0 = SymplecticForm(dim=rank).matrix
    U = np.column_stack(us)
    V = np.column_stack(vs)
    Ahat = (U * amps) @ V.T - (V * amps) @ U.T
    err = math.sqrt(2.0) * float(np.linalg.norm(A - Ahat))
    return SkewFactorization(
        rank=rank, A0=A0, frame=frame, scaled_frame=scaled_frame,
        skew_eigs=amps, reconstruction_error=err, kernel_norm=norm_kernel,
        discretization=N, tol_used=tol_used)


def capacity_bound(f: SkewFactorization) -> float:
    """2 sqrt(m) sqrt(sum of s^2) over the positive-imaginary eigenvalues."""
    if f.rank == 0:
        return 0.0
    return 2.0 * math.sqrt(f.m) * math.sqrt(float(np.sum(f.skew_eigs ** 2)))


# -- kernels ------------------------------------------------------------------


def kernel_on_grid(Z: MatrixFunction, form: SymplecticForm, ts, taus,
                   sign: int = 1):
    """V(t, tau) = sign * Z(t)^T J Z(tau) on a grid, shape (nt, ntau, k, k)."""
    Zt = Z.eval_many(np.asarray(ts))
    Ztau = Z.eval_many(np.asarray(taus))
    J = form.matrix
    return sign * np.einsum("tak,ab,rbl->trkl", Zt, J, Ztau)


def _triangle_quad(fun, knots, q):
    """integral over {0 <= tau < t <= 1} of fun(ts, taus) (vectorized pairs)."""
    x, w = npleg.leggauss(q)
    total = 0.0
    pieces = list(zip(knots[:-1], knots[1:]))
    for io, (lo_t, hi_t) in enumerate(pieces):
        mid_t, half_t = 0.5 * (lo_t + hi_t), 0.5 * (hi_t - lo_t)
        ts = mid_t + half_t * x
        wt = w * half_t
        for ii, (lo_s, hi_s) in enumerate(pieces):
            if ii > io:
                continue
            if ii < io:
                mid_s, half_s = 0.5 * (lo_s + hi_s), 0.5 * (hi_s - lo_s)
                taus = mid_s + half_s * x
                ws = w * half_s
                vals = fun(ts, taus)                     # (q, q)
                total += float(wt @ vals @ ws)
            else:
                # diagonal piece: inner integral from lo_s to each outer node
                for t_node, wt_node in zip(ts, wt):
                    half_s = 0.5 * (t_node - lo_s)
                    if half_s <= 0:
                        continue
                    taus = lo_s + half_s * (x + 1.0)
                    vals = fun(np.array([t_node]), taus)[0]
                    total += wt_node * half_s * float(w @ vals)
    return total


def kernel_hs_norm(spec: QuadraticFormSpec, q: int | None = None) -> float:
    """Hilbert-Schmidt norm of the Volterra kernel over the triangle."""
    Z, form = spec.Z, spec.form
    if q is None:
        q = 2 * Z.degree + 8

    def sq(ts, taus):
        V = kernel_on_grid(Z, form, ts, taus)
        return np.sum(V ** 2, axis=(2, 3))

    return math.sqrt(max(_triangle_quad(sq, Z.knots, q), 0.0))
