"""Mean numbers of critical points by Morse index and by level.

The expected count of index-k critical points of a unit-variance isotropic
field over a set of volume |S| is a product of a model-dependent prefactor
and a pure GOE quantity, the exponential-square moment of the (k+1)-th
ordered eigenvalue of an (N+1)-GOE matrix:

    E N_k(S) = |S| / pi**((N+1)/2) * (lambda4/(3 lambda2))**(N/2)
               * k_N/k_{N+1} * 1/(N+1) * E[exp(-L_{k+1}**2/2)].

Because the prefactor is index-independent, the index *fractions* are
model-free and are computed here without any covariance input.  The
level-restricted counts add a Gaussian tail factor inside the expectation,
with a separate degenerate branch at lambda4 = 3 lambda2**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .covariance import CovarianceModel, ModelError
from .goe import (
    exp_moment_ordered,
    normalization_constant,
    ordered_eigen_density,
)
from .quadrature import Interval, gaussian_cdf, gaussian_pdf, gaussian_sf, integrate_1d

__all__ = [
    "CountQuery",
    "mean_count_index",
    "mean_count_total",
    "mean_count_total_closed_n2",
    "mean_count_index_above",
    "index_fractions",
    "exact_fraction_constants",
    "phi_product_gaussian_moment",
    "DEGENERATE_REL_TOL",
]

#: Relative threshold on lambda4 - 3 lambda2**2 for the degenerate level branch.
DEGENERATE_REL_TOL = 1e-12

_MAX_N = 8


@dataclass(frozen=True)
class CountQuery:
    """A mean-count request: field model, dimension, optional index and level."""

    model: CovarianceModel
    N: int
    k: int | None = None
    u: float | None = None
    volume: float = 1.0

    def __post_init__(self):
        if not 1 <= self.N <= _MAX_N:
            raise ValueError(f"N must be in 1..{_MAX_N}")
        if self.k is not None and not 0 <= self.k <= self.N:
            raise ValueError(f"index k must be in 0..{self.N}")
        if not self.volume >= 0.0:
            raise ValueError("volume must be nonnegative")


def _prefactor(model: CovarianceModel, N: int, volume: float) -> float:
    lam2 = model.lambda2
    lam4 = model.lambda4
    return (
        volume
        / math.pi ** ((N + 1) / 2.0)
        * (lam4 / (3.0 * lam2)) ** (N / 2.0)
        * normalization_constant(N)
        / normalization_constant(N + 1)
        / (N + 1)
    )


def mean_count_index(model: CovarianceModel, N: int, k: int, volume: float = 1.0) -> float:
    """Expected number of critical points of index k in a set of size ``volume``."""
    CountQuery(model, N, k, volume=volume)
    return _prefactor(model, N, volume) * exp_moment_ordered(N + 1, k + 1)


def mean_count_total(model: CovarianceModel, N: int, volume: float = 1.0) -> float:
    """Expected total number of critical points (sum over all indexes)."""
    CountQuery(model, N, volume=volume)
    return _prefactor(model, N, volume) * sum(
        exp_moment_ordered(N + 1, k + 1) for k in range(N + 1)
    )


def mean_count_total_closed_n2(model: CovarianceModel, volume: float = 1.0) -> float:
    """Printed closed form of the total count in dimension 2."""
    return 2.0 * volume / (math.sqrt(3.0) * math.pi) * model.lambda4 / (3.0 * model.lambda2)


def mean_count_index_above(
    model: CovarianceModel, N: int, k: int, u: float, volume: float = 1.0
) -> float:
    """Expected number of index-k critical points with value above ``u``.

    Regular branch (lambda4 > 3 lambda2**2): the exponential-square moment
    gains the factor ``sf(sqrt(lambda4/(lambda4-3*lambda2**2)) *
    (u - ell*sqrt(6)*lambda2/sqrt(lambda4)))``.  At equality the factor
    degenerates to the indicator ``ell > u/sqrt(2)``; below it the formula's
    hypothesis fails and the query is rejected.
    """
    CountQuery(model, N, k, u=u, volume=volume)
    lam2 = model.lambda2
    lam4 = model.lambda4
    gap = lam4 - 3.0 * lam2 * lam2
    if gap < -DEGENERATE_REL_TOL * lam4:
        raise ModelError(
            "level counts require lambda4 >= 3*lambda2**2 "
            f"(got lambda4 - 3*lambda2**2 = {gap:.3e})"
        )
    pref = _prefactor(model, N, volume)
    if gap <= DEGENERATE_REL_TOL * lam4:
        # degenerate branch: hard truncation of the eigenvalue integral
        lo = u / math.sqrt(2.0)

        def integrand(ells):
            q = np.array([ordered_eigen_density(N + 1, k + 1, ell) for ell in ells])
            return q * np.exp(-0.5 * ells * ells)

        return pref * integrate_1d(integrand, Interval(lo, math.inf), tol=1e-10)

    slope = math.sqrt(lam4 / gap)
    shift = math.sqrt(6.0) * lam2 / math.sqrt(lam4)

    def integrand(ells):
        q = np.array([ordered_eigen_density(N + 1, k + 1, ell) for ell in ells])
        return q * np.exp(-0.5 * ells * ells) * gaussian_sf(slope * (u - shift * ells))

    return pref * integrate_1d(
        integrand, Interval(-math.inf, math.inf), tol=1e-10, max_intervals=8192
    )


@lru_cache(maxsize=None)
def index_fractions(N: int) -> tuple:
    """Fractions of critical points by index, ``k = 0..N``.

    Model-independent: the covariance prefactor cancels in the ratio, so the
    fractions are ratios of exponential-square moments of the (N+1)-GOE
    ordered eigenvalues.  No printed reference values exist for N >= 6.
    """
    if not 1 <= N <= _MAX_N:
        raise ValueError(f"N must be in 1..{_MAX_N}")
    moments = np.array([exp_moment_ordered(N + 1, k + 1) for k in range(N + 1)])
    fractions = moments / moments.sum()
    return tuple(float(f) for f in fractions)


@lru_cache(maxsize=None)
def phi_product_gaussian_moment(tol: float = 1e-12) -> float:
    """``E[cdf(Y) * cdf(sqrt(2) Y)]`` for centred Y with variance 1/3.

    Left unevaluated in closed form; computed by quadrature and used by the
    exact dimension-4 fraction constants.
    """
    sigma = 1.0 / math.sqrt(3.0)

    def integrand(zs):
        y = sigma * zs
        return gaussian_cdf(y) * gaussian_cdf(math.sqrt(2.0) * y) * gaussian_pdf(zs)

    return integrate_1d(integrand, Interval(-math.inf, math.inf), tol=tol)


def exact_fraction_constants(N: int) -> tuple:
    """Printed exact index fractions for N <= 4 (dimension-4 uses quadrature
    only through :func:`phi_product_gaussian_moment`)."""
    if N == 1:
        return (0.5, 0.5)
    if N == 2:
        return (0.25, 0.5, 0.25)
    if N == 3:
        lo = (29.0 - 6.0 * math.sqrt(6.0)) / 116.0
        hi = (29.0 + 6.0 * math.sqrt(6.0)) / 116.0
        return (lo, hi, hi, lo)
    if N == 4:
        cal_i = phi_product_gaussian_moment()
        extreme = (cal_i * 100.0 * math.pi - 57.0) / (200.0 * math.pi)
        middle = (50.0 * math.pi * (1.0 - 2.0 * cal_i) + 57.0) / (100.0 * math.pi)
        return (extreme, 0.25, middle, 0.25, extreme)
    raise ValueError(f"no printed fraction constants for N = {N}")
