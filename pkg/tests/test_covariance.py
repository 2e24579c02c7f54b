"""Spectral moments, derivative covariances, and the block decomposition."""

import math

import numpy as np
import pytest

from critpoints.covariance import (
    CovarianceModel,
    ModelError,
    derivative_covariance,
    hessian_diagonal_cov,
    moment_inequality_check,
    parse_model_spec,
    zeta_block_covariances,
)

GAUSSIAN = CovarianceModel.gaussian()


class TestSpectralMoments:
    def test_gaussian_moments(self):
        # r(x) = exp(-x): lambda_{2n} = (2n)!/n!
        assert GAUSSIAN.lambda2 == pytest.approx(2.0)
        assert GAUSSIAN.lambda4 == pytest.approx(12.0)
        assert GAUSSIAN.lambda6 == pytest.approx(120.0)
        assert GAUSSIAN.lambda8 == pytest.approx(1680.0)

    def test_scaled_gaussian(self):
        m = CovarianceModel.gaussian(a=0.5)
        assert m.lambda2 == pytest.approx(1.0)
        assert m.lambda4 == pytest.approx(3.0)

    def test_flat_model_rejected(self):
        with pytest.raises(ModelError):
            CovarianceModel.from_radial(lambda m, x: 1.0 if m == 0 else 0.0)

    def test_unit_variance_required(self):
        with pytest.raises(ModelError):
            CovarianceModel.from_radial(lambda m, x: 2.0 * (-1.0) ** m * math.exp(-x))

    def test_moments_only_missing_order(self):
        m = CovarianceModel.from_moments(2.0, 12.0)
        with pytest.raises(ModelError):
            m.lambda6


class TestDerivativeCovariance:
    def test_mixed_second_order(self):
        # two pure second derivatives in orthogonal directions
        assert derivative_covariance(GAUSSIAN, (2, 0), (0, 2)) == pytest.approx(
            GAUSSIAN.lambda4 / 3.0
        )

    def test_value_vs_second_derivative(self):
        assert derivative_covariance(GAUSSIAN, (0,), (2,)) == pytest.approx(
            -GAUSSIAN.lambda2
        )

    def test_first_vs_third(self):
        assert derivative_covariance(GAUSSIAN, (1,), (3,)) == pytest.approx(
            -GAUSSIAN.lambda4
        )

    def test_odd_component_vanishes(self):
        assert derivative_covariance(GAUSSIAN, (1, 0), (0, 1)) == 0.0

    def test_swap_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            i = tuple(rng.integers(0, 3, size=3))
            j = tuple(rng.integers(0, 3, size=3))
            if sum(i) + sum(j) > 8:
                continue
            assert derivative_covariance(GAUSSIAN, i, j) == pytest.approx(
                derivative_covariance(GAUSSIAN, j, i), rel=1e-14
            )

    def test_order_cap(self):
        with pytest.raises(ModelError):
            derivative_covariance(GAUSSIAN, (4, 4), (2, 0))


class TestZetaBlocks:
    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_hessian_diagonal_determinant(self, N):
        # det Var(X_11..X_NN) = (N+2) 2^(N-1) (lambda4/3)^N
        det = np.linalg.det(hessian_diagonal_cov(GAUSSIAN, N))
        lam4 = GAUSSIAN.lambda4
        expect = (N + 2) * 2 ** (N - 1) * (lam4 / 3.0) ** N
        assert det == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_mixed_third_derivative_determinant(self, N):
        blocks = zeta_block_covariances(GAUSSIAN, N)
        det = np.linalg.det(blocks["zeta4"][np.ix_([0] + list(range(2, N + 1)),
                                                   [0] + list(range(2, N + 1)))])
        l2, l4, l6 = GAUSSIAN.lambda2, GAUSSIAN.lambda4, GAUSSIAN.lambda6
        expect = (2 * l6 / 15.0) ** (N - 2) * (
            3 * (N + 1) * l2 * l6 - 5 * (N - 1) * l4**2
        ) / 45.0
        assert det == pytest.approx(expect, rel=1e-12)

    def test_zeta5_matrix(self):
        blocks = zeta_block_covariances(GAUSSIAN, 3)
        l2, l4, l6 = GAUSSIAN.lambda2, GAUSSIAN.lambda4, GAUSSIAN.lambda6
        np.testing.assert_allclose(
            blocks["zeta5"],
            [[l2, -l4 / 3.0], [-l4 / 3.0, l6 / 5.0]],
            rtol=1e-14,
        )

    def test_zeta3_corner_entries(self):
        blocks = zeta_block_covariances(GAUSSIAN, 3)
        z3 = blocks["zeta3"]
        l2, l4, l6, l8 = (GAUSSIAN.spectral_moment(n) for n in (1, 2, 3, 4))
        assert z3[0, 0] == pytest.approx(1.0)
        assert z3[0, 1] == pytest.approx(l4)       # value vs fourth derivative
        assert z3[1, 2] == pytest.approx(-l6)      # fourth vs parallel second
        assert z3[1, 3] == pytest.approx(-l6 / 5)  # fourth vs orthogonal second
        assert z3[1, 1] == pytest.approx(l8)

    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_blocks_positive_semidefinite(self, N):
        blocks = zeta_block_covariances(GAUSSIAN, N)
        for name in ("zeta3", "zeta4", "zeta5"):
            w = np.linalg.eigvalsh(blocks[name])
            assert w.min() > -1e-10 * max(1.0, w.max()), name

    def test_rank_one_plus_identity_determinant(self):
        # det(x Id + y J) = x^(n-1) (x + n y)
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(1, 7))
            x, y = rng.normal(0, 2, size=2)
            mat = x * np.eye(n) + y * np.ones((n, n))
            assert np.linalg.det(mat) == pytest.approx(
                x ** (n - 1) * (x + n * y), rel=1e-10, abs=1e-10
            )


class TestMomentInequalities:
    def test_gaussian_passes(self):
        report = moment_inequality_check(GAUSSIAN, 2)
        assert report.passed
        n2 = next(e for e in report.entries if e[0] == 2)
        assert n2[3] == pytest.approx(6.0)  # 12*1 - 1.5*4

    def test_sine_cosine_equality_fails(self):
        # lambda4 = lambda2^2 in one dimension is the degenerate equality case
        m = CovarianceModel.from_moments(2.0, 4.0)
        assert not moment_inequality_check(m, 1).passed

    def test_constructed_violation_fails(self):
        m = CovarianceModel.from_moments(2.0, 12.0, 30.0)
        assert not moment_inequality_check(m, 2).passed


class TestModelSpec:
    def test_gaussian_spec(self):
        m = parse_model_spec("gaussian:a=2.0")
        assert m.lambda2 == pytest.approx(4.0)

    def test_gaussian_default(self):
        assert parse_model_spec("gaussian").lambda2 == pytest.approx(2.0)

    def test_moments_spec(self):
        m = parse_model_spec("moments:l2=2,l4=13,l6=130,l8=1900")
        assert m.lambda8 == pytest.approx(1900.0)

    @pytest.mark.parametrize(
        "bad", ["gaussian:b=1", "moments:l2=2", "wavelet:a=1", "moments:l2=x,l4=2"]
    )
    def test_malformed_specs(self, bad):
        with pytest.raises(ModelError):
            parse_model_spec(bad)
