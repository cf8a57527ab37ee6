"""Unit and property tests for the piecewise-polynomial algebra."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volcap import MatrixFunction, SymplecticForm, sandwich, stack_rows


def coeff_lists(max_degree=3):
    return st.lists(
        st.floats(min_value=-2.0, max_value=2.0, allow_nan=False,
                  allow_infinity=False),
        min_size=1, max_size=max_degree + 1)


def entry_matrices(rows, cols, max_degree=3):
    return st.lists(
        st.lists(coeff_lists(max_degree), min_size=cols, max_size=cols),
        min_size=rows, max_size=rows)


class TestEval:
    def test_constant(self):
        M = np.array([[1.0, -2.0], [0.5, 3.0]])
        F = MatrixFunction.constant(M)
        for t in (0.0, 0.3, 1.0):
            assert np.array_equal(F(t), M)

    def test_monomials(self):
        F = MatrixFunction.from_entries([[(0.0, 1.0), 0.0], [0.0, (0.0, 0.0, 1.0)]])
        np.testing.assert_allclose(F(0.5), np.diag([0.5, 0.25]), atol=1e-15)

    def test_right_limit_at_breakpoint(self):
        left = np.array([[[1.0]]])
        right = np.array([[[2.0]]])
        F = MatrixFunction([0.0, 0.5, 1.0], [left, right])
        assert F(0.5) == pytest.approx(2.0)
        assert F(0.499999) == pytest.approx(1.0)
        assert F(1.0) == pytest.approx(2.0)

    def test_domain_error(self):
        F = MatrixFunction.constant([[1.0]])
        with pytest.raises(ValueError):
            F(1.5)
        with pytest.raises(ValueError):
            F(-0.2)

    def test_eval_many_matches_scalar(self):
        F = MatrixFunction.from_entries(
            [[(0.2, 1.0, -0.5)]], breakpoints=[0.3, 0.7])
        ts = np.linspace(0.0, 1.0, 23)
        batch = F.eval_many(ts)
        singles = np.stack([F(t) for t in ts])
        np.testing.assert_allclose(batch, singles, atol=1e-15)


class TestCalculus:
    def test_linear_derivative_is_constant(self):
        M = np.array([[2.0, -1.0]])
        F = MatrixFunction.from_entries([[(0.0, 2.0), (0.0, -1.0)]])
        D = F.derivative()
        for t in (0.1, 0.9):
            np.testing.assert_allclose(D(t), M, atol=1e-15)

    def test_constant_derivative_is_zero(self):
        F = MatrixFunction.constant([[4.0]])
        assert F.derivative().sup_norm() == 0.0

    def test_order_beyond_degree(self):
        F = MatrixFunction.from_entries([[(1.0, 2.0, 3.0)]])
        assert F.derivative(5).sup_norm() == 0.0

    def test_cubic_second_derivative_finite_difference(self):
        F = MatrixFunction.from_entries([[(0.0, 0.0, 0.0, 1.0)]])
        D2 = F.derivative(2)
        assert D2(1.0)[0, 0] == pytest.approx(6.0, rel=1e-13)
        h = 1e-5
        for t in (0.3, 0.6):
            fd = (F(t + h) + F(t - h) - 2 * F(t))[0, 0] / h**2
            assert D2(t)[0, 0] == pytest.approx(fd, rel=1e-5)

    def test_integrate_constant_and_linear(self):
        M = np.array([[3.0, -1.0]])
        assert np.allclose(MatrixFunction.constant(M).integrate(), M)
        F = MatrixFunction.from_entries([[(0.0, 2.0)]])
        assert F.integrate()[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_integrate_bounds_error(self):
        F = MatrixFunction.constant([[1.0]])
        with pytest.raises(ValueError):
            F.integrate(0.8, 0.2)

    def test_sqrt_projection_integral(self):
        # non-polynomial input admitted via projection, residual recorded
        F = MatrixFunction.from_callable(
            lambda t: np.array([[np.sqrt(t)]]), 1, 1, degree=8)
        assert F.projection_residual > 1e-10  # sqrt kink is not polynomial
        from scipy.integrate import quad
        oracle, _ = quad(np.sqrt, 0.0, 1.0)
        assert F.integrate()[0, 0] == pytest.approx(oracle, abs=2 * F.projection_residual)

    @given(entry_matrices(1, 1, max_degree=4))
    @settings(max_examples=40, deadline=None)
    def test_derivative_of_antiderivative_is_identity(self, entries):
        F = MatrixFunction.from_entries(entries, breakpoints=[0.4])
        G = F.antiderivative().derivative()
        for ca, cb in zip(F.coeffs, G.coeffs):
            m = min(ca.shape[0], cb.shape[0])
            np.testing.assert_allclose(cb[:m], ca[:m], atol=1e-13, rtol=1e-13)
            if cb.shape[0] > m:
                np.testing.assert_allclose(cb[m:], 0.0, atol=1e-13)

    @given(entry_matrices(1, 1, max_degree=3),
           st.floats(min_value=0.05, max_value=0.95))
    @settings(max_examples=40, deadline=None)
    def test_integral_additive_over_split(self, entries, c):
        F = MatrixFunction.from_entries(entries)
        whole = F.integrate(0.0, 1.0)
        split = F.integrate(0.0, c) + F.integrate(c, 1.0)
        np.testing.assert_allclose(split, whole, atol=1e-14, rtol=1e-13)


class TestAlgebra:
    def test_sandwich_isotropic_column(self):
        Z = MatrixFunction.constant([[1.0], [0.0]])
        A = sandwich(Z, SymplecticForm.standard(1), Z)
        assert A.sup_norm() == pytest.approx(0.0, abs=1e-15)

    def test_sandwich_identity_gives_form_matrix(self):
        J = SymplecticForm.standard(1)
        Z = MatrixFunction.constant(np.eye(2))
        A = sandwich(Z, J, Z)
        np.testing.assert_allclose(A(0.5), J.matrix, atol=1e-15)

    def test_sandwich_triangular_pair(self):
        # [[x1, x3], [0, x2]] pairs to [[0, -x1 x2], [x1 x2, 0]]
        x1, x2, x3 = (1.0, 0.5), (2.0,), (0.0, 0.0, 1.0)
        Z = MatrixFunction.from_entries([[x1, x3], [(0.0,), x2]])
        A = sandwich(Z, SymplecticForm.standard(1), Z)
        for t in (0.0, 0.3, 0.8):
            prod = (1.0 + 0.5 * t) * 2.0
            np.testing.assert_allclose(
                A(t), [[0.0, -prod], [prod, 0.0]], atol=1e-13)

    def test_sandwich_shape_error(self):
        Z = MatrixFunction.constant([[1.0], [0.0], [0.0]])
        with pytest.raises(ValueError):
            sandwich(Z, SymplecticForm.standard(1), Z)

    def test_sandwich_pointwise_skew_100_points(self, rng):
        A = MatrixFunction.from_entries(
            [[tuple(rng.uniform(-1, 1, 3)) for _ in range(2)]
             for _ in range(4)], breakpoints=[0.6])
        S = sandwich(A, SymplecticForm.standard(2), A)
        for t in rng.uniform(0.0, 1.0, 100):
            v = S(t)
            np.testing.assert_allclose(v + v.T, 0.0, atol=1e-13)

    @given(entry_matrices(2, 2, max_degree=2), entry_matrices(2, 2, max_degree=2))
    @settings(max_examples=30, deadline=None)
    def test_matmul_matches_pointwise(self, ea, eb):
        A = MatrixFunction.from_entries(ea)
        B = MatrixFunction.from_entries(eb, breakpoints=[0.5])
        C = A @ B
        for t in (0.1, 0.5, 0.9):
            np.testing.assert_allclose(C(t), A(t) @ B(t), atol=1e-12)

    def test_stack_rows_and_slices(self):
        top = MatrixFunction.from_entries([[(1.0, 1.0)]])
        bot = MatrixFunction.from_entries([[(0.0, 0.0, 2.0)]], breakpoints=[0.25])
        Z = stack_rows(top, bot)
        assert Z.shape == (2, 1)
        np.testing.assert_allclose(Z(0.5)[0, 0], 1.5, atol=1e-14)
        np.testing.assert_allclose(Z(0.5)[1, 0], 0.5, atol=1e-14)
        back = Z.row_block(0, 1)
        np.testing.assert_allclose(back(0.7), top(0.7), atol=1e-14)


class TestSymplecticForm:
    def test_invariants(self):
        for n in (1, 2, 3):
            J = SymplecticForm.standard(n).matrix
            np.testing.assert_array_equal(J @ J, -np.eye(2 * n))
            np.testing.assert_array_equal(J.T, -J)

    def test_odd_dim_rejected(self):
        with pytest.raises(ValueError):
            SymplecticForm(dim=3)


class TestSerialization:
    def test_roundtrip_bit_exact(self, rng):
        F = MatrixFunction.from_entries(
            [[tuple(rng.uniform(-1, 1, 5)), tuple(rng.uniform(-1, 1, 2))]],
            breakpoints=[1 / 3])
        G = MatrixFunction.from_json(F.to_json())
        assert np.array_equal(np.asarray(G.knots), np.asarray(F.knots))
        for ca, cb in zip(F.coeffs, G.coeffs):
            assert np.array_equal(ca, cb)

    def test_schema_fields(self):
        F = MatrixFunction.constant([[1.0, 0.0]])
        data = json.loads(F.to_json())
        assert set(data) == {"rows", "cols", "breakpoints", "pieces"}
        assert data["pieces"][0]["interval"] == [0.0, 1.0]
        assert data["rows"] == 1 and data["cols"] == 2

    def test_breakpoints_excludes_endpoints(self):
        F = MatrixFunction.from_entries([[(1.0,)]], breakpoints=[0.2, 0.9])
        np.testing.assert_allclose(F.breakpoints, [0.2, 0.9])
