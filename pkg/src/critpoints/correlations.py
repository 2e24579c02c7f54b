"""Two-point structure of critical points at separation ``rho``.

Conditioning the pair of Hessians at 0 and ``rho * e1`` on vanishing
gradients at both points yields an exact joint Gaussian law with four
covariance blocks: the diagonal Hessian entries of the two points couple
through dense matrices (``gamma1`` within a point, ``gamma3`` across), the
off-diagonal entries through scalar pairs (``gamma2`` within, ``gamma4``
across), and the two groups are independent.  The correlation function

    A(rho) = E[ |det H(0) det H(t)| | grad(0) = grad(t) = 0 ] * p_grad(0, 0)

is estimated by Monte Carlo from that law, optionally restricted by Morse
index, and compared against the small-rho asymptotic equivalents (total and
adjacent-index) whose constants come from the restricted squared-determinant
moments of the GOE module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .covariance import CovarianceModel
from .goe import gamma_const, gamma_const_indexed, symmetric_eigenvalues
from .quadrature import Interval, gaussian_pdf, integrate_1d

__all__ = [
    "SingularSeparationError",
    "ConditionalHessianModel",
    "CorrEstimate",
    "gradient_pair_density",
    "conditional_cov",
    "small_rho_limits",
    "corr_mc",
    "corr_asymptote_total",
    "corr_asymptote_adjacent",
    "corr_1d_extrema_asymptote",
    "mario_moment",
    "mario_constant",
    "exponent_fit",
]


class SingularSeparationError(ValueError):
    """The conditioning at this separation is degenerate (rho too small/large)."""


#: Conditioning degenerates when this denominator is at most the threshold.
_DENOM_FLOOR = 1e-14

#: Eigenvalue clipping floor for assembled covariance blocks.
_PSD_FLOOR = -1e-10

#: Relative eigenvalue threshold below which a sampled Hessian counts as
#: Morse-degenerate and the draw is discarded.
_DEGENERATE_EIG_REL = 1e-10


def _derivs(model: CovarianceModel, rho: float):
    """Radial derivatives at 0 and at rho**2 used by the conditional law.

    Evaluated in extended precision: the conditioning denominators cancel
    like rho**2 at small separations, and double precision alone would lose
    the scaled covariance entries there.
    """
    one = np.longdouble(1.0)
    x = np.longdouble(rho) * np.longdouble(rho)
    return {
        "rp0": model.radial_deriv(1, 0.0 * one),
        "rpp0": model.radial_deriv(2, 0.0 * one),
        "rp": model.radial_deriv(1, x),
        "rpp": model.radial_deriv(2, x),
        "rppp": model.radial_deriv(3, x),
        "r4": model.radial_deriv(4, x),
    }


def _grad_cross_cov(d, rho: float, N: int) -> np.ndarray:
    """Diagonal of Cov(grad X(0), grad X(t)): first coordinate differs."""
    rho2 = np.longdouble(rho) * np.longdouble(rho)
    c = np.full(N, -2.0 * d["rp"], dtype=np.longdouble)
    c[0] = -2.0 * d["rp"] - 4.0 * rho2 * d["rpp"]
    return c


def gradient_pair_density(model: CovarianceModel, N: int, rho: float) -> float:
    """Joint density of (grad X(0), grad X(t)) at (0, 0).

    The gradient pair splits into independent per-coordinate 2x2 blocks
    ``[[lambda2, c_i], [c_i, lambda2]]``, so the density is
    ``(2 pi)**-N * prod_i (lambda2**2 - c_i**2) ** -1/2``.
    """
    if rho <= 0.0:
        raise SingularSeparationError("gradient pair density requires rho > 0")
    d = _derivs(model, rho)
    lam2 = np.longdouble(-2.0) * d["rp0"]
    c = _grad_cross_cov(d, rho, N)
    dets = lam2 * lam2 - c * c
    if np.any(dets <= 0.0):
        raise SingularSeparationError(
            f"gradient pair covariance is singular at rho = {rho:g}"
        )
    return float((2.0 * math.pi) ** (-N) / np.sqrt(np.prod(dets)))


def _check_psd(mat: np.ndarray, what: str) -> np.ndarray:
    """Eigen-clip tiny negatives; raise if genuinely indefinite."""
    if mat.size == 0:
        return mat
    w, v = np.linalg.eigh(mat)
    scale = max(1.0, float(w[-1]))
    if w[0] < _PSD_FLOOR * scale:
        raise SingularSeparationError(
            f"{what} is not positive semidefinite (min eigenvalue {w[0]:.3e})"
        )
    return (v * np.clip(w, 0.0, None)) @ v.T


@dataclass(frozen=True)
class ConditionalHessianModel:
    """Joint law of the two Hessians given vanishing gradients at 0 and t.

    ``gamma1``/``gamma3`` are the within/across covariance blocks of the
    diagonal Hessian entries (N x N); ``gamma2``/``gamma4`` the diagonal
    vectors for the off-diagonal entries, ordered (1,2)..(1,N) then
    lexicographic.  ``grad_cross`` is the per-coordinate gradient cross
    covariance defining the conditioning density.
    """

    model: CovarianceModel
    N: int
    rho: float
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma4: np.ndarray
    grad_cross: np.ndarray

    def joint_diag_cov(self) -> np.ndarray:
        """(2N x 2N) covariance of (diag entries at 0, diag entries at t)."""
        return np.block([[self.gamma1, self.gamma3], [self.gamma3, self.gamma1]])

    def pairs(self):
        """Off-diagonal index pairs in storage order."""
        return [(i, j) for i in range(self.N) for j in range(i + 1, self.N)]

    def sample(self, rng, size: int):
        """Draw ``size`` Hessian pairs; returns arrays (size, N, N) twice."""
        N = self.N
        cov_d = _check_psd(self.joint_diag_cov(), "diagonal-entry joint covariance")
        w, v = np.linalg.eigh(cov_d)
        root = v * np.sqrt(np.clip(w, 0.0, None))
        z = rng.standard_normal((size, 2 * N))
        diag_both = z @ root.T
        h0 = np.zeros((size, N, N))
        ht = np.zeros((size, N, N))
        idx = np.arange(N)
        h0[:, idx, idx] = diag_both[:, :N]
        ht[:, idx, idx] = diag_both[:, N:]
        if N > 1:
            g2 = np.clip(self.gamma2, 0.0, None)
            g4 = self.gamma4
            if np.any(g2 < np.abs(g4) - 1e-12 * np.maximum(1.0, g2)):
                raise SingularSeparationError(
                    "off-diagonal entry pair covariance is indefinite"
                )
            # each pair (u0, ut) is an independent 2x2 Gaussian with
            # Var = g2 on both sides and Cov = g4
            ratio = np.divide(g4, g2, out=np.zeros_like(g4), where=g2 > 0)
            resid = np.sqrt(np.clip(g2 - ratio * g4, 0.0, None))
            z1 = rng.standard_normal((size, g2.size))
            z2 = rng.standard_normal((size, g2.size))
            u0 = np.sqrt(g2) * z1
            ut = ratio * u0 + resid * z2
            for e, (i, j) in enumerate(self.pairs()):
                h0[:, i, j] = h0[:, j, i] = u0[:, e]
                ht[:, i, j] = ht[:, j, i] = ut[:, e]
        return h0, ht


def conditional_cov(model: CovarianceModel, N: int, rho: float) -> ConditionalHessianModel:
    """Exact conditional covariance blocks of the Hessian pair.

    Requires an analytic model (four radial derivatives at ``rho**2``).
    Rejects separations where the conditioning denominator
    ``r'(0)**2 - (r' + 2 r'' rho**2)**2`` falls below ``1e-14``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if rho <= 0.0:
        raise SingularSeparationError("conditional law requires rho > 0")
    d = _derivs(model, rho)
    rho2 = np.longdouble(rho) * np.longdouble(rho)
    den1 = d["rp0"] ** 2 - (d["rp"] + 2.0 * d["rpp"] * rho2) ** 2
    den2 = d["rp0"] ** 2 - d["rp"] ** 2
    if den1 <= _DENOM_FLOOR or den2 <= _DENOM_FLOOR:
        raise SingularSeparationError(
            f"conditioning degenerate at rho = {rho:g} "
            f"(denominators {float(den1):.3e}, {float(den2):.3e})"
        )

    # rank-one correction generator shared by gamma1 and gamma3
    v = np.full(N, 4.0 * d["rpp"], dtype=np.longdouble)
    v[0] = 12.0 * d["rpp"] + 8.0 * rho2 * d["rppp"]
    corr = np.outer(v, v)

    base1 = np.full((N, N), 4.0 * d["rpp0"], dtype=np.longdouble)
    np.fill_diagonal(base1, 12.0 * d["rpp0"])
    gamma1 = base1 + (rho2 * d["rp0"] / (2.0 * den1)) * corr

    a = 4.0 * d["rpp"] + 8.0 * rho2 * d["rppp"]
    dd = 12.0 * d["rpp"] + 48.0 * rho2 * d["rppp"] + 16.0 * rho2 * rho2 * d["r4"]
    base3 = np.full((N, N), 4.0 * d["rpp"], dtype=np.longdouble)
    np.fill_diagonal(base3, 12.0 * d["rpp"])
    base3[0, :] = a
    base3[:, 0] = a
    base3[0, 0] = dd
    gamma3 = base3 + (rho2 * (d["rp"] + 2.0 * d["rpp"] * rho2) / (2.0 * den1)) * corr

    n_first = N - 1
    n_rest = (N - 1) * (N - 2) // 2
    g2_first = 4.0 * d["rpp0"] + 8.0 * rho2 * d["rpp"] ** 2 * d["rp0"] / den2
    g4_first = a + 8.0 * rho2 * d["rpp"] ** 2 * d["rp"] / den2
    gamma2 = np.concatenate(
        [np.full(n_first, g2_first), np.full(n_rest, 4.0 * d["rpp0"])]
    )
    gamma4 = np.concatenate([np.full(n_first, g4_first), np.full(n_rest, 4.0 * d["rpp"])])

    hess = ConditionalHessianModel(
        model=model,
        N=N,
        rho=rho,
        gamma1=gamma1.astype(float),
        gamma2=gamma2.astype(float),
        gamma3=gamma3.astype(float),
        gamma4=gamma4.astype(float),
        grad_cross=_grad_cross_cov(d, rho, N).astype(float),
    )
    _check_psd(hess.joint_diag_cov(), "diagonal-entry joint covariance")
    return hess


def small_rho_limits(model: CovarianceModel, N: int) -> dict:
    """Leading small-rho coefficients of the conditional covariance blocks.

    Keys ending in ``_over_rho2`` (or ``_over_rho6``, ``_over_rho2N``) are
    coefficients of the indicated power; the others are plain limits.
    Serves as the oracle table for convergence tests of
    :func:`conditional_cov`.
    """
    l2 = model.lambda2
    l4 = model.lambda4
    l6 = model.lambda6
    table = {
        "var_11_over_rho2": (l2 * l6 - l4 * l4) / (4.0 * l2),
        "var_1j_over_rho2": (9.0 * l2 * l6 - 5.0 * l4 * l4) / (180.0 * l2),
        "var_jj": 8.0 * l4 / 9.0,
        "var_jk": l4 / 3.0,
        "cov_11_jj_same_over_rho2": (11.0 * l2 * l6 - 15.0 * l4 * l4) / (180.0 * l2),
        "cov_jj_kk_same": 2.0 * l4 / 9.0,
        "cov_11_cross_over_rho2": -(l2 * l6 - l4 * l4) / (4.0 * l2),
        "cov_1j_cross_over_rho2": -(9.0 * l2 * l6 - 5.0 * l4 * l4) / (180.0 * l2),
        "cov_11_jj_cross_over_rho2": (15.0 * l4 * l4 - 7.0 * l2 * l6) / (180.0 * l2),
        "cov_jj_kk_cross": 2.0 * l4 / 9.0,
        "cov_jj_cross": 8.0 * l4 / 9.0,
        "cov_jk_cross": l4 / 3.0,
        "det_grad_over_rho2N": l2**N * l4**N / 3.0 ** (N - 1),
    }
    if model.has_moment(4):
        l8 = model.lambda8
        table["det_var_11_pair_over_rho6"] = (
            (l4 * l8 - l6 * l6) * (l2 * l6 - l4 * l4) / (144.0 * l2 * l4)
        )
    return table


@dataclass(frozen=True)
class CorrEstimate:
    """Monte Carlo estimate of a correlation function value at one rho."""

    rho: float
    value: float
    std_error: float
    samples: int
    index_pair: tuple | None = None
    discarded: int = 0

    def __post_init__(self):
        if not self.std_error > 0.0:
            raise ValueError("std_error must be positive")
        if self.value < 0.0:
            raise ValueError("correlation estimates are nonnegative")


def corr_mc(
    model: CovarianceModel,
    N: int,
    rho: float,
    index_pair: tuple | None = None,
    samples: int = 1_000_000,
    seed=0,
    batches: int = 100,
) -> CorrEstimate:
    """Monte Carlo estimate of A(rho) or of an index-restricted A^{i1,i2}(rho).

    Draws Hessian pairs from the exact conditional law, averages
    ``|det H(0) det H(t)|`` (with index indicators when requested; the index
    is the negative-eigenvalue count from the Jacobi solver), and multiplies
    by the gradient pair density.  The standard error comes from batch means
    over ``batches`` chunks; results are deterministic for fixed
    ``(seed, batches)``.  Near-singular draws (some eigenvalue below
    ``1e-10 * ||H||``) are discarded and counted.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    if index_pair is not None:
        i1, i2 = index_pair
        if not (0 <= i1 <= N and 0 <= i2 <= N):
            raise ValueError(f"index pair {index_pair} outside 0..{N}")
    hess = conditional_cov(model, N, rho)
    p_grad = gradient_pair_density(model, N, rho)
    seqs = np.random.SeedSequence(seed).spawn(batches)
    chunk = (samples + batches - 1) // batches
    means = []
    discarded = 0
    drawn = 0
    for seq in seqs:
        count = min(chunk, samples - drawn)
        if count <= 0:
            break
        drawn += count
        rng = np.random.default_rng(seq)
        h0, ht = hess.sample(rng, count)
        w = np.abs(np.linalg.det(h0) * np.linalg.det(ht))
        if index_pair is not None:
            e0 = symmetric_eigenvalues(h0)
            et = symmetric_eigenvalues(ht)
            norm0 = np.abs(e0).max(axis=1)
            normt = np.abs(et).max(axis=1)
            ok = (np.abs(e0).min(axis=1) > _DEGENERATE_EIG_REL * norm0) & (
                np.abs(et).min(axis=1) > _DEGENERATE_EIG_REL * normt
            )
            discarded += int(count - ok.sum())
            match = ((e0 < 0.0).sum(axis=1) == i1) & ((et < 0.0).sum(axis=1) == i2)
            w = np.where(ok & match, w, 0.0)
            means.append(w[ok].mean() if ok.any() else 0.0)
        else:
            means.append(w.mean())
    means = np.asarray(means)
    value = p_grad * float(means.mean())
    se = p_grad * float(means.std(ddof=1) / math.sqrt(means.size))
    return CorrEstimate(
        rho=rho,
        value=max(value, 0.0),
        std_error=max(se, 1e-300),
        samples=drawn,
        index_pair=tuple(index_pair) if index_pair is not None else None,
        discarded=discarded,
    )


def _lambda_factor(model: CovarianceModel, N: int) -> float:
    l2, l4, l6 = model.lambda2, model.lambda4, model.lambda6
    return (l4 / l2) ** (N / 2.0) * (l2 * l6 - l4 * l4) / (l2 * l4)


def corr_asymptote_total(model: CovarianceModel, N: int, rho: float) -> float:
    """Small-rho equivalent of A(rho): ``rho**(2-N)`` times a model constant.

    The constant carries ``gamma_{N-1} / (2**3 3**((N-1)/2) pi**N)``; for
    N = 1 this reduces exactly to the 1-D repulsion law.
    """
    coeff = gamma_const(N - 1) / (8.0 * 3.0 ** ((N - 1) / 2.0) * math.pi**N)
    return rho ** (2.0 - N) * coeff * _lambda_factor(model, N)


def corr_asymptote_adjacent(model: CovarianceModel, N: int, k: int, rho: float) -> float:
    """Small-rho equivalent of A^{k,k+1}(rho) for adjacent Morse indexes."""
    if not 0 <= k <= N - 1:
        raise ValueError(f"adjacent-index k must be in 0..{N - 1}")
    coeff = gamma_const_indexed(N - 1, k) / (
        16.0 * 3.0 ** ((N - 1) / 2.0) * math.pi**N
    )
    return rho ** (2.0 - N) * coeff * _lambda_factor(model, N)


def corr_1d_extrema_asymptote(model: CovarianceModel, rho: float) -> float:
    """Small-rho equivalent of the 1-D maxima-maxima (= minima-minima)
    correlation: a model constant times ``rho**4``.  One-dimensional only."""
    l2, l4, l6, l8 = model.lambda2, model.lambda4, model.lambda6, model.lambda8
    coeff = (l4 * l8 - l6 * l6) ** 1.5 / (
        1296.0 * math.pi**2 * l4**2 * math.sqrt(l2 * l6 - l4 * l4)
    )
    return coeff * rho**4


def mario_moment(r: float, sigma2: float, c: float) -> float:
    """``E[(X+ Y+)**r]`` for centred jointly Gaussian X, Y with common
    variance ``sigma2`` and correlation ``c``.

    Closed forms for r = 1, 2; other positive r by nested quadrature of the
    conditional representation.
    """
    if not -1.0 < c < 1.0:
        raise ValueError("correlation must satisfy |c| < 1")
    if not sigma2 > 0.0:
        raise ValueError("variance must be positive")
    if r == 1:
        return (
            sigma2
            / (2.0 * math.pi)
            * (math.sqrt(1.0 - c * c) + c * (0.5 * math.pi + math.asin(c)))
        )
    if r == 2:
        return (
            sigma2**2
            / (2.0 * math.pi)
            * (
                (1.0 + 2.0 * c * c) * (0.5 * math.pi + math.asin(c))
                + 3.0 * c * math.sqrt(1.0 - c * c)
            )
        )
    if not r > 0:
        raise ValueError("r must be positive")
    sigma = math.sqrt(sigma2)
    s = sigma * math.sqrt(1.0 - c * c)

    def inner(x: float) -> float:
        mu = c * x

        def f(ys):
            return ys**r * gaussian_pdf((ys - mu) / s) / s

        return integrate_1d(f, Interval(0.0, mu + 12.0 * s), tol=1e-11)

    def outer(xs):
        return np.array(
            [x**r * inner(x) * gaussian_pdf(x / sigma) / sigma for x in xs]
        )

    return integrate_1d(outer, Interval(0.0, 12.0 * sigma), tol=1e-9)


def mario_constant(r: float) -> float:
    """Limit constant ``K_r`` of the anticorrelated product moment.

    ``K_r = B(r+1, r+1)/(2 pi) * int_0^inf u**(2r+1) exp(-u**2/2) du``
    after collapsing the planar integral along x + y = u; the radial factor
    is evaluated by quadrature.  ``K_1 = 1/(6 pi)``.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    beta = math.gamma(r + 1.0) ** 2 / math.gamma(2.0 * r + 2.0)
    radial = integrate_1d(
        lambda u: u ** (2.0 * r + 1.0) * np.exp(-0.5 * u * u),
        Interval(0.0, math.inf),
        tol=1e-12,
    )
    return beta * radial / (2.0 * math.pi)


def exponent_fit(estimates) -> tuple:
    """Weighted least-squares slope of log(value) against log(rho).

    Expects at least three positive estimates at distinct rho spanning a
    decade; weights come from the delta-method error of the log.  Returns
    ``(slope, slope_std_error)``.
    """
    usable = [e for e in estimates if e.value > 0.0]
    rhos = sorted({e.rho for e in usable})
    if len(usable) < 3 or len(rhos) < 3:
        raise ValueError("need at least 3 positive estimates at distinct rho")
    if rhos[-1] / rhos[0] < 10.0 * (1.0 - 1e-9):
        raise ValueError("rho values must span at least one decade")
    x = np.log([e.rho for e in usable])
    y = np.log([e.value for e in usable])
    sig = np.array([e.std_error / e.value for e in usable])
    w = 1.0 / sig**2
    design = np.column_stack([np.ones_like(x), x])
    gram = design.T @ (w[:, None] * design)
    rhs = design.T @ (w * y)
    cov = np.linalg.inv(gram)
    beta = cov @ rhs
    return float(beta[1]), float(math.sqrt(cov[1, 1]))
