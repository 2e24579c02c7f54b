"""Partial moments, special functions, and the adaptive integrator."""

import math

import numpy as np
import pytest

from critpoints.quadrature import (
    FULL_LINE,
    Interval,
    QuadratureError,
    gaussian_cdf,
    gaussian_partial_moment,
    gaussian_partial_moments,
    gaussian_pdf,
    gaussian_sf,
    integrate_1d,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


class TestSpecialFunctions:
    def test_cdf_at_zero(self):
        assert gaussian_cdf(0.0) == 0.5

    def test_pdf_at_zero(self):
        assert gaussian_pdf(0.0) == pytest.approx(1.0 / SQRT_2PI, abs=1e-15)

    def test_cdf_symmetry(self):
        x = np.linspace(-8, 8, 201)
        np.testing.assert_allclose(gaussian_cdf(x) + gaussian_cdf(-x), 1.0, atol=1e-15)

    def test_sf_is_complement(self):
        x = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(gaussian_sf(x), 1.0 - gaussian_cdf(x), atol=1e-15)


class TestInterval:
    def test_order_enforced(self):
        with pytest.raises(ValueError):
            Interval(1.0, 0.0)

    def test_truncation(self):
        iv = Interval(-math.inf, 2.0).truncated()
        assert iv.lo == -12.0 and iv.hi == 2.0


class TestPartialMoments:
    def test_normalization(self):
        assert gaussian_partial_moment(0, FULL_LINE) == pytest.approx(SQRT_2PI, rel=1e-15)

    def test_first_moment_half_line(self):
        assert gaussian_partial_moment(1, Interval(0.0, math.inf)) == pytest.approx(1.0)

    def test_even_moments_are_double_factorials(self):
        # int x^k exp(-x^2/2) over R = (k-1)!! sqrt(2 pi) for even k
        for k in range(0, 11, 2):
            expect = SQRT_2PI * math.prod(range(k - 1, 0, -2)) if k else SQRT_2PI
            assert gaussian_partial_moment(k, FULL_LINE) == pytest.approx(expect, rel=1e-13)

    def test_odd_moments_vanish(self):
        for k in range(1, 11, 2):
            assert gaussian_partial_moment(k, FULL_LINE) == pytest.approx(0.0, abs=1e-13)

    def test_additivity(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            a, b, c = np.sort(rng.normal(0.0, 3.0, size=3))
            k = int(rng.integers(0, 13))
            left = gaussian_partial_moment(k, Interval(a, b))
            right = gaussian_partial_moment(k, Interval(b, c))
            full = gaussian_partial_moment(k, Interval(a, c))
            assert left + right == pytest.approx(full, abs=1e-12 * max(1.0, abs(full)))

    def test_vectorized_endpoints(self):
        hi = np.linspace(-2, 2, 7)
        all_orders = gaussian_partial_moments(6, -np.inf, hi)
        for i, h in enumerate(hi):
            assert all_orders[4, i] == pytest.approx(
                gaussian_partial_moment(4, Interval(-math.inf, h)), rel=1e-14
            )

    def test_order_cap(self):
        with pytest.raises(ValueError):
            gaussian_partial_moment(25, FULL_LINE)


class TestIntegrate1d:
    def test_gaussian_mass(self):
        assert integrate_1d(gaussian_pdf, FULL_LINE, 1e-12) == pytest.approx(1.0, abs=1e-12)

    def test_odd_integrand(self):
        val = integrate_1d(lambda x: x * gaussian_pdf(x), FULL_LINE, 1e-12)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_matches_partial_moments(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            k = int(rng.integers(0, 9))
            a, b = np.sort(rng.normal(0.0, 4.0, size=2))
            quad = integrate_1d(
                lambda x: x**k * np.exp(-0.5 * x * x), Interval(a, b), 1e-11
            )
            exact = gaussian_partial_moment(k, Interval(a, b))
            assert quad == pytest.approx(exact, abs=1e-9)

    def test_nonconvergence_carries_estimate(self):
        # square-root singularity: bisection converges too slowly for the budget
        def singular(x):
            return 1.0 / np.sqrt(np.abs(x))

        with pytest.raises(QuadratureError) as err:
            integrate_1d(singular, Interval(0.0, 1.0), tol=1e-12, max_intervals=8)
        assert err.value.error_bound > 1e-12
        assert math.isfinite(err.value.estimate)
        assert err.value.estimate == pytest.approx(2.0, abs=0.1)

    def test_subinterval_refinement(self):
        # integrand with a kink; adaptive bisection must localise it
        val = integrate_1d(lambda x: np.abs(x) * gaussian_pdf(x), FULL_LINE, 1e-11)
        assert val == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-10)
