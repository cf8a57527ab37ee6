"""Model spectra: closed forms, FD oracle, merging and shift bounds."""

import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from volcap import ModelSpectrum, exact_spectrum, merge_direct_sum, shift_bounds
from volcap.asympt import fit_capacity


def fd_periodic_eigenvalues(mu, length, npts, count):
    """Finite-difference eigensolver for w'' = -(mu/lambda) w, periodic.

    Returns the ``count`` largest lambda from the second-difference circulant
    on a ``npts`` grid over [0, length]; independent of the closed form.
    """
    h = length / npts
    main = 2.0 * np.ones(npts)
    off = -np.ones(npts - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    A[0, -1] = -1.0
    A[-1, 0] = -1.0
    A = (A / h**2).tocsc()
    vals = spla.eigsh(A, k=count + 2, sigma=-1e-6, which="LM",
                      return_eigenvectors=False)
    vals = np.sort(vals)
    vals = vals[vals > 1e-6][:count]
    return mu / vals


class TestExactSpectrum:
    def test_paper_values_k1(self):
        m = ModelSpectrum(mu=1.0, k=1, parity="even")
        s = exact_spectrum(m, 4)
        expect = [1 / (2 * math.pi) ** 2, 1 / (2 * math.pi) ** 2,
                  1 / (4 * math.pi) ** 2, 1 / (4 * math.pi) ** 2]
        np.testing.assert_allclose(s.positive, expect, rtol=1e-15)
        assert s.n_negative == 0

    def test_zero_mu_empty(self):
        s = exact_spectrum(ModelSpectrum(mu=0.0, k=1), 5)
        assert s.n_positive == 0 and s.n_negative == 0

    def test_negative_mu_switches_side(self):
        s = exact_spectrum(ModelSpectrum(mu=-2.0, k=1), 4)
        assert s.n_positive == 0
        np.testing.assert_allclose(
            s.negative, [-2 / (2 * math.pi) ** 2, -2 / (2 * math.pi) ** 2,
                         -2 / (4 * math.pi) ** 2, -2 / (4 * math.pi) ** 2])

    def test_odd_two_sided_symmetric(self):
        s = exact_spectrum(ModelSpectrum(mu=3.0, k=1, parity="odd"), 6)
        np.testing.assert_array_equal(s.negative, -s.positive)
        assert s.positive[0] == pytest.approx(3 / (2 * math.pi))

    def test_multiplicity_two_pairs(self):
        for parity in ("even", "odd"):
            s = exact_spectrum(ModelSpectrum(mu=1.0, k=2, parity=parity), 8)
            pos = s.positive
            np.testing.assert_array_equal(pos[0::2], pos[1::2])

    def test_length_rescaling_against_fd_oracle(self):
        # lambda scales by length^(2k); FD grid 2048 on [0, 1/2]
        m = ModelSpectrum(mu=1.0, k=1, length=0.5, parity="even")
        s = exact_spectrum(m, 6)
        assert s.positive[0] == pytest.approx(0.25 / (2 * math.pi) ** 2)
        oracle = fd_periodic_eigenvalues(1.0, 0.5, 2048, 6)
        np.testing.assert_allclose(s.positive, oracle, rtol=1e-3)

    def test_counting_matches_enumeration(self):
        # #{r : lambda_r >= s} from the closed form vs direct enumeration
        m = ModelSpectrum(mu=1.0, k=1, parity="even")
        lams = exact_spectrum(m, 400).positive
        for s in np.geomspace(lams[-1], lams[0], 100):
            direct = int(np.sum(lams >= s))
            closed = 2 * int(math.floor(math.sqrt(1.0 / s) / (2 * math.pi)))
            assert direct == closed


class TestMergeDirectSum:
    def test_single_input_identity(self):
        s = exact_spectrum(ModelSpectrum(mu=1.0, k=1), 10)
        merged = merge_direct_sum([s], 10)
        np.testing.assert_array_equal(merged.positive, s.positive)

    def test_equal_inputs_duplicate(self):
        seq = np.array([1.0, 0.5, 1 / 3])
        from volcap.galerkin import SpectrumResult
        s = SpectrumResult(positive=seq, negative=-seq)
        merged = merge_direct_sum([s, s], 6)
        np.testing.assert_array_equal(merged.positive,
                                      np.repeat(seq, 2))
        np.testing.assert_array_equal(merged.negative,
                                      np.repeat(-seq, 2))

    def test_lazy_models_merge(self):
        m1 = ModelSpectrum(mu=4.0, k=1, parity="even")
        m2 = ModelSpectrum(mu=9.0, k=1, parity="even")
        merged = merge_direct_sum([m1, m2], 3000)
        # brute-force merge oracle
        a = exact_spectrum(m1, 3000).positive
        b = exact_spectrum(m2, 3000).positive
        brute = np.sort(np.concatenate([a, b]))[::-1][:3000]
        np.testing.assert_array_equal(merged.positive, brute)
        # fitted value approaches (sqrt(4) + sqrt(9))^2 = 25
        fit = fit_capacity(merged, window=(500, 1200))
        assert fit.order == 2
        assert fit.pos.value == pytest.approx(25.0, rel=0.02)

    def test_merge_commutes_with_truncation(self):
        m1 = ModelSpectrum(mu=1.0, k=1, parity="odd")
        m2 = ModelSpectrum(mu=2.5, k=2, parity="odd")
        count = 50
        merged = merge_direct_sum([m1, m2], count)
        long1 = exact_spectrum(m1, 2 * count)
        long2 = exact_spectrum(m2, 2 * count)
        via_prefix = merge_direct_sum([long1, long2], count)
        np.testing.assert_array_equal(merged.positive, via_prefix.positive)
        np.testing.assert_array_equal(merged.negative, via_prefix.negative)


class TestShiftBounds:
    def test_arithmetic_example(self):
        # m=1, k=1, order 2, value 1, r=10: 1/(pi 8)^2 >= lam >= 1/(pi 12)^2
        m = ModelSpectrum(mu=1.0, k=1, parity="even")
        lower, upper = shift_bounds(m, m=1, r=10)
        assert upper == pytest.approx(1.0 / (math.pi * 8) ** 2)
        assert lower == pytest.approx(1.0 / (math.pi * 12) ** 2)

    def test_exact_spectrum_inside_own_bounds(self):
        for parity, k in itertools.product(("even", "odd"), (1, 2)):
            model = ModelSpectrum(mu=1.3, k=k, parity=parity)
            if parity == "even":
                lams = exact_spectrum(model, 60).positive
            else:
                lams = exact_spectrum(model, 60).positive
            for r in range(k, 61):
                lower, upper = shift_bounds(model, m=1, r=r)
                assert lower <= lams[r - 1] <= upper

    def test_below_threshold_rejected(self):
        with pytest.raises(ValueError):
            shift_bounds(ModelSpectrum(mu=1.0, k=2), m=3, r=5)

    def test_negative_side_mirrored(self):
        model = ModelSpectrum(mu=1.0, k=1, parity="odd")
        lams = exact_spectrum(model, 40).negative
        for r in range(1, 41):
            lower, upper = shift_bounds(model, m=1, r=-r)
            assert lower <= lams[r - 1] <= upper

    def test_galerkin_inside_bounds(self, spectra_cache):
        # constant instance has order 1, k = 1, single pair (m = 1)
        s = spectra_cache("const", 256)
        model = ModelSpectrum(mu=1.0, k=1, parity="odd")
        slack = 1.0 + 1e-8
        for r in range(1, 41):
            lower, upper = shift_bounds(model, m=1, r=r)
            assert lower / slack <= s.positive[r - 1] <= upper * slack


class TestFdOracle:
    def test_unit_case_grid_4096(self):
        m = ModelSpectrum(mu=1.0, k=1, parity="even")
        s = exact_spectrum(m, 8)
        oracle = fd_periodic_eigenvalues(1.0, 1.0, 4096, 8)
        np.testing.assert_allclose(s.positive, oracle, rtol=1e-3)
