"""Ordered-eigenvalue densities: Pfaffian path, closed forms, sampling."""

import math

import numpy as np
import pytest

from critpoints.goe import (
    build_skew_matrix,
    closed_form_density,
    exp_moment_ordered,
    gamma2_indexed,
    gamma2_total,
    gamma_const,
    gamma_const_indexed,
    joint_eigen_density,
    normalization_constant,
    ordered_density_grid,
    ordered_eigen_density,
    sample_goe_spectra,
    symmetric_eigenvalues,
)
from critpoints.quadrature import FULL_LINE, gaussian_sf, integrate_1d

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)


class TestNormalizationConstant:
    def test_one_dimensional(self):
        assert normalization_constant(1) == pytest.approx(1.0 / SQRT_2PI, rel=1e-14)

    def test_single_eigenvalue_density_normalizes(self):
        val = integrate_1d(
            lambda x: normalization_constant(1) * np.exp(-0.5 * x * x),
            FULL_LINE,
            1e-12,
        )
        assert val == pytest.approx(1.0, abs=1e-11)

    def test_two_dim_joint_density_normalizes(self):
        # nested 1-D cubature of k_2 exp(-(x^2+y^2)/2) |y - x|
        def outer(ys):
            out = []
            for y in ys:
                inner = integrate_1d(
                    lambda x, y=y: joint_density_row(x, y), FULL_LINE, 1e-10
                )
                out.append(inner)
            return np.asarray(out)

        def joint_density_row(x, y):
            return (
                normalization_constant(2)
                * np.exp(-0.5 * (x * x + y * y))
                * np.abs(y - x)
            )

        assert integrate_1d(outer, FULL_LINE, 1e-8) == pytest.approx(1.0, abs=1e-7)


class TestJointDensity:
    def test_coincident_points_vanish(self):
        assert joint_eigen_density([0.0, 0.0]) == 0.0

    def test_one_dim_standard_normal(self):
        assert joint_eigen_density([0.0]) == pytest.approx(1.0 / SQRT_2PI)

    def test_mean_gap_matches_sampling(self):
        rng_samples = sample_goe_spectra(2, 60_000, seed=991)
        mc_gap = np.diff(rng_samples, axis=1).mean()
        se = np.diff(rng_samples, axis=1).std() / math.sqrt(len(rng_samples))

        def outer(ys):
            out = []
            for y in ys:
                out.append(
                    integrate_1d(
                        lambda x, y=y: np.abs(y - x) ** 2
                        * normalization_constant(2)
                        * np.exp(-0.5 * (x * x + y * y)),
                        FULL_LINE,
                        1e-9,
                    )
                )
            return np.asarray(out)

        exact = integrate_1d(outer, FULL_LINE, 1e-7)  # E|mu2 - mu1| over ordered pairs
        assert mc_gap == pytest.approx(exact, abs=3.0 * se)


class TestSkewMatrixConstruction:
    def test_border_entry_closed_form(self):
        # n = 1, I empty: integral of (x - l) exp(-x^2/2) over (l, inf)
        for ell in (-1.0, 0.0, 0.7, 2.5):
            mat = build_skew_matrix(1, 1, (), ell)
            expect = math.exp(-0.5 * ell * ell) - ell * SQRT_2PI * gaussian_sf(ell)
            assert mat.entries[0, 1] == pytest.approx(expect, rel=1e-12)

    def test_antisymmetry_exact(self):
        mat = build_skew_matrix(1, 3, (1, 3), 0.4)
        np.testing.assert_array_equal(mat.entries, -mat.entries.T)

    def test_large_ell_matches_unconditional(self):
        # every row below ell = the unrestricted de Bruijn entries at ell = 12
        full = build_skew_matrix(1, 2, (1, 2), 12.0)
        restricted = build_skew_matrix(1, 2, (1, 2), 11.999999)
        assert full.entries[0, 1] == pytest.approx(
            restricted.entries[0, 1], rel=1e-5
        )

    @pytest.mark.parametrize("alpha", [1, 2])
    @pytest.mark.parametrize("subset,pos", [((), (0, 1)), ((1, 2, 3), (1, 2))])
    def test_double_entry_brute_force(self, alpha, subset, pos):
        # independent oracle: raw 2-D trapezoid of the signed integrand
        ell = 0.3
        mat = build_skew_matrix(alpha, 3, subset, ell)
        i, j = pos[0] + 1, pos[1] + 1
        below = lambda r: r in subset
        lo_x, hi_x = (-10.0, ell) if below(i) else (ell, 10.0)
        lo_y, hi_y = (-10.0, ell) if below(j) else (ell, 10.0)
        xs = np.linspace(lo_x, hi_x, 3001)
        ys = np.linspace(lo_y, hi_y, 3001)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        f = (
            np.sign(Y - X)
            * X ** (i - 1)
            * Y ** (j - 1)
            * (X - ell) ** alpha
            * (Y - ell) ** alpha
            * np.exp(-0.5 * (X * X + Y * Y))
        )
        brute = np.trapezoid(np.trapezoid(f, ys, axis=1), xs)
        assert mat.entries[pos] == pytest.approx(brute, rel=2e-4, abs=1e-6)


class TestOrderedDensities:
    def test_middle_of_three_is_gaussian(self):
        for ell in np.linspace(-4, 4, 17):
            assert ordered_eigen_density(3, 2, ell) == pytest.approx(
                math.exp(-ell * ell) / SQRT_PI, abs=1e-12
            )

    def test_printed_values_at_zero(self):
        assert ordered_eigen_density(2, 2, 0.0) == pytest.approx(
            1.0 / (2.0 * SQRT_PI), abs=1e-12
        )
        assert ordered_eigen_density(3, 3, 0.0) == pytest.approx(
            (SQRT_2PI - SQRT_PI) / (2.0 * math.pi * math.sqrt(2.0)), abs=1e-12
        )

    def test_closed_form_example(self):
        assert closed_form_density(3, 2, 1.0) == pytest.approx(
            math.exp(-1.0) / SQRT_PI, rel=1e-14
        )

    def test_reflection_identities(self):
        ells = np.linspace(-3.5, 3.5, 15)
        for N in (2, 3, 4, 5):
            for k in range(1, N + 1):
                np.testing.assert_allclose(
                    closed_form_density(N, k, ells),
                    closed_form_density(N, N + 1 - k, -ells),
                    atol=1e-12,
                )

    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_pfaffian_matches_closed_form(self, N):
        ells = np.linspace(-5.0, 5.0, 21)
        grid = ordered_density_grid(N, ells)
        for k in range(1, N + 1):
            np.testing.assert_allclose(
                grid[:, k - 1], closed_form_density(N, k, ells), atol=1e-9
            )

    @pytest.mark.parametrize("N,k", [(2, 1), (3, 2), (4, 2), (5, 5), (6, 3)])
    def test_normalization(self, N, k):
        val = integrate_1d(
            lambda l: np.array([ordered_eigen_density(N, k, x) for x in l]),
            FULL_LINE,
            1e-8,
        )
        assert val == pytest.approx(1.0, abs=1e-7)

    def test_reflection_symmetry_pfaffian_path(self):
        # sign-flip symmetry of the ensemble, checked where no closed form
        # exists to fall back on
        for ell in (0.4, 1.3, -2.1):
            for k in (1, 3):
                assert ordered_eigen_density(6, k, ell) == pytest.approx(
                    ordered_eigen_density(6, 7 - k, -ell), abs=1e-9
                )

    def test_partition_matches_pooled_marginal(self):
        # sum over k of the ordered densities = N * marginal of a random
        # eigenvalue, estimated by a pooled Monte Carlo histogram
        N = 3
        pooled = sample_goe_spectra(N, 60_000, seed=314).ravel()
        hist, edges = np.histogram(pooled, bins=40, range=(-3.5, 3.5), density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        summed = np.array(
            [
                sum(ordered_eigen_density(N, k, c) for k in range(1, N + 1))
                for c in centers
            ]
        )
        binned_se = np.sqrt(hist / (pooled.size * np.diff(edges))) + 1e-12
        assert np.all(np.abs(hist - summed / N) < 4.0 * binned_se + 0.01)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            ordered_eigen_density(10, 1, 0.0)
        with pytest.raises(ValueError):
            ordered_eigen_density(3, 4, 0.0)
        with pytest.raises(ValueError):
            closed_form_density(6, 1, 0.0)


class TestSampling:
    def test_single_draw_deterministic(self):
        a = sample_goe_spectra(3, 5, seed=42)
        b = sample_goe_spectra(3, 5, seed=42)
        np.testing.assert_array_equal(a, b)

    def test_one_dim_is_standard_normal(self):
        s = sample_goe_spectra(1, 50_000, seed=3)
        assert abs(s.mean()) < 3.0 / math.sqrt(50_000)
        assert s.std() == pytest.approx(1.0, abs=0.02)

    def test_trace_identity(self):
        # eigenvalue sum equals the matrix trace: checked via the solver
        rng = np.random.default_rng(8)
        mats = rng.normal(size=(50, 5, 5))
        mats = (mats + mats.transpose(0, 2, 1)) / 2.0
        vals = symmetric_eigenvalues(mats)
        np.testing.assert_allclose(
            vals.sum(axis=1), np.trace(mats, axis1=1, axis2=2), atol=1e-10
        )

    def test_jacobi_matches_lapack(self):
        rng = np.random.default_rng(17)
        mats = rng.normal(size=(100, 6, 6))
        mats = (mats + mats.transpose(0, 2, 1)) / 2.0
        np.testing.assert_allclose(
            symmetric_eigenvalues(mats), np.linalg.eigvalsh(mats), atol=1e-10
        )

    def test_largest_eigenvalue_mean(self):
        s = sample_goe_spectra(2, 150_000, seed=55)
        mc = s[:, 1].mean()
        se = s[:, 1].std() / math.sqrt(len(s))
        exact = integrate_1d(
            lambda l: np.array([x * ordered_eigen_density(2, 2, x) for x in l]),
            FULL_LINE,
            1e-9,
        )
        assert mc == pytest.approx(exact, abs=3.0 * se)


class TestGammaMoments:
    def test_empty_matrix_convention(self):
        assert gamma2_indexed(0, 0, 1.3) == 1.0
        assert gamma_const(0) == 1.0

    def test_one_dim_total(self):
        # E (g - x)^2 = 1 + x^2 for a standard normal g
        for x in (-1.5, 0.0, 0.7):
            assert gamma2_total(1, x) == pytest.approx(1.0 + x * x, rel=1e-10)

    def test_one_dim_partition_at_zero(self):
        assert gamma2_indexed(1, 0, 0.0) + gamma2_indexed(1, 1, 0.0) == pytest.approx(
            1.0, rel=1e-10
        )

    def test_gamma1_exact(self):
        assert gamma_const(1) == pytest.approx(4.0 / 3.0, abs=1e-8)

    def test_monte_carlo_total(self):
        rng = np.random.default_rng(202)
        n = 200_000
        g = rng.standard_normal((n, 2, 2))
        g = (g + g.transpose(0, 2, 1)) / 2.0
        idx = np.arange(2)
        g[:, idx, idx] = rng.standard_normal((n, 2))
        x = 0.3
        draws = np.linalg.det(g - x * np.eye(2)) ** 2
        se = draws.std() / math.sqrt(n)
        assert gamma2_total(2, x) == pytest.approx(draws.mean(), abs=3.0 * se)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_indexed_partition(self, n):
        total = sum(gamma_const_indexed(n, k) for k in range(n + 1))
        assert total == pytest.approx(gamma_const(n), abs=1e-7)


class TestExpMoment:
    def test_middle_of_three(self):
        # integral of the Gaussian-square factor against a N(0,1/2) density
        assert exp_moment_ordered(3, 2) == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-9)

    def test_values_in_unit_interval(self):
        for N, k in ((2, 1), (4, 3), (5, 2)):
            v = exp_moment_ordered(N, k)
            assert 0.0 < v < 1.0

    def test_monte_carlo_agreement(self):
        s = sample_goe_spectra(3, 200_000, seed=77)
        draws = np.exp(-0.5 * s[:, 0] ** 2)
        se = draws.std() / math.sqrt(len(draws))
        assert exp_moment_ordered(3, 1) == pytest.approx(draws.mean(), abs=3.0 * se)
