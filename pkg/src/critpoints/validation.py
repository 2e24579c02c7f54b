"""End-to-end validation checks tying every analytic path to an independent one.

Each check returns a :class:`CheckResult`; the full suite is the package's
acceptance gate (also exercised by ``tests/test_acceptance.py``), while the
quick suite shrinks Monte Carlo budgets for a fast smoke run from the CLI.

The model used throughout is the built-in Gaussian covariance (spectral
moments 2, 12, 120, 1680).  Note that this model has lambda4 = 3*lambda2**2
exactly, so level-count checks that need the regular branch use a
moments-only model sitting strictly above the degenerate line.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogi
from scipy.stats import kstest

from . import correlations, counts, fields, goe
from .covariance import CovarianceModel
from .quadrature import Interval, integrate_1d

__all__ = ["CheckResult", "run_suite", "SUITES", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{status} {self.name} ({self.runtime:.1f}s) {parts}"


_GAUSSIAN = CovarianceModel.gaussian()

#: Valid moments-only model strictly above the degenerate level-count line.
_REGULAR_MODEL = CovarianceModel.from_moments(2.0, 13.0, 130.0, 1900.0)

_DENSITY_GRID = np.arange(-6.0, 6.0 + 1e-9, 0.05)


def check_goe_closed_forms(quick: bool = False) -> CheckResult:
    """Pfaffian densities vs printed closed forms: sup gap and normalisation."""
    grid = _DENSITY_GRID[::4] if quick else _DENSITY_GRID
    worst_gap = 0.0
    worst_norm = 0.0
    for N in range(2, 6):
        dens = goe.ordered_density_grid(N, grid)
        for k in range(1, N + 1):
            gap = float(np.max(np.abs(dens[:, k - 1] - goe.closed_form_density(N, k, grid))))
            worst_gap = max(worst_gap, gap)
            norm = integrate_1d(
                lambda l, N=N, k=k: np.asarray(goe.closed_form_density(N, k, l)),
                Interval(-math.inf, math.inf),
                tol=1e-9,
            )
            worst_norm = max(worst_norm, abs(norm - 1.0))
    passed = worst_gap <= 1e-6 and worst_norm <= 1e-7
    return CheckResult(
        "goe-closed-forms",
        passed,
        {"sup_gap": f"{worst_gap:.2e}", "norm_err": f"{worst_norm:.2e}"},
    )


def check_q32_gaussian(quick: bool = False) -> CheckResult:
    """The middle 3-GOE eigenvalue is exactly centred Gaussian, variance 1/2."""
    grid = _DENSITY_GRID[::4] if quick else _DENSITY_GRID
    target = np.exp(-grid * grid) / math.sqrt(math.pi)
    vals = np.array([goe.ordered_eigen_density(3, 2, l) for l in grid])
    gap = float(np.max(np.abs(vals - target)))
    return CheckResult("q32-gaussian", gap <= 1e-9, {"sup_gap": f"{gap:.2e}"})


def _cdf_from_density(N: int, k: int):
    xs = np.arange(-9.0, 9.0 + 1e-9, 0.005)
    pdf = np.asarray(goe.closed_form_density(N, k, xs))
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(xs))])
    cdf = np.clip(cdf / cdf[-1], 0.0, 1.0)
    return lambda x: np.interp(x, xs, cdf)


def check_sampling_ks(quick: bool = False, seed=20240801) -> CheckResult:
    """KS agreement between sampled ordered eigenvalues and the density CDFs."""
    n_samples = 20_000 if quick else 100_000
    crit = kolmogi(0.01) / math.sqrt(n_samples)
    worst = 0.0
    worst_pair = None
    for N in range(2, 6):
        spectra = goe.sample_goe_spectra(N, n_samples, seed=(seed, N))
        for k in range(1, N + 1):
            stat = kstest(spectra[:, k - 1], _cdf_from_density(N, k)).statistic
            if stat > worst:
                worst, worst_pair = stat, (N, k)
    return CheckResult(
        "sampling-ks",
        worst < crit,
        {"worst_D": f"{worst:.4f}", "crit": f"{crit:.4f}", "at": worst_pair},
    )


def check_index_fractions(quick: bool = False) -> CheckResult:
    """Computed fractions vs the printed constants, and the quadrature
    cross-check of the dimension-4 Gaussian-product moment."""
    del quick
    worst = 0.0
    for N in (2, 3, 4):
        got = np.array(counts.index_fractions(N))
        want = np.array(counts.exact_fraction_constants(N))
        worst = max(worst, float(np.max(np.abs(got - want))))
    # the printed 0.060 corresponds to a product moment of about 0.3014
    printed = (0.060 * 200.0 * math.pi + 57.0) / (100.0 * math.pi)
    gap_i = abs(counts.phi_product_gaussian_moment() - printed)
    passed = worst <= 5e-4 and gap_i <= 2e-3
    return CheckResult(
        "index-fractions",
        passed,
        {"max_err": f"{worst:.2e}", "product_moment_gap": f"{gap_i:.2e}"},
    )


def check_gamma_constants(quick: bool = False, seed=7011) -> CheckResult:
    """Quadrature and Monte Carlo agreement of the squared-determinant constants."""
    g0 = goe.gamma_const(0)
    g1 = goe.gamma_const(1)
    n_mc = 100_000 if quick else 1_000_000
    rng = np.random.default_rng(seed)
    draws = (rng.standard_normal(n_mc) - rng.standard_normal(n_mc) / math.sqrt(3.0)) ** 2
    mc = draws.mean()
    mc_se = draws.std(ddof=1) / math.sqrt(n_mc)
    partition_err = 0.0
    top = 2 if quick else 4
    for n in range(1, top + 1):
        total = sum(goe.gamma_const_indexed(n, k) for k in range(n + 1))
        partition_err = max(partition_err, abs(total - goe.gamma_const(n)))
    passed = (
        g0 == 1.0
        and abs(g1 - 4.0 / 3.0) <= 1e-8
        and abs(mc - 4.0 / 3.0) <= 3.0 * mc_se
        and partition_err <= 1e-7
    )
    return CheckResult(
        "gamma-constants",
        passed,
        {
            "gamma1_err": f"{abs(g1 - 4/3):.2e}",
            "mc_sigma": f"{abs(mc - 4/3) / mc_se:.2f}",
            "partition_err": f"{partition_err:.2e}",
        },
    )


_SCALED_ENTRIES = {
    # (block, selector) -> limit key; selectors resolved in _scaled_entry
    ("gamma1", "00"): "var_11_over_rho2",
    ("gamma1", "0j"): "cov_11_jj_same_over_rho2",
    ("gamma1", "jj"): "var_jj",
    ("gamma1", "jk"): "cov_jj_kk_same",
    ("gamma2", "first"): "var_1j_over_rho2",
    ("gamma2", "rest"): "var_jk",
    ("gamma3", "00"): "cov_11_cross_over_rho2",
    ("gamma3", "0j"): "cov_11_jj_cross_over_rho2",
    ("gamma3", "jj"): "cov_jj_cross",
    ("gamma3", "jk"): "cov_jj_kk_cross",
    ("gamma4", "first"): "cov_1j_cross_over_rho2",
    ("gamma4", "rest"): "cov_jk_cross",
}


def _scaled_entry(hess, block: str, selector: str, rho: float):
    mat = getattr(hess, block)
    N = hess.N
    scale = rho * rho if "rho2" in _SCALED_ENTRIES[(block, selector)] else 1.0
    if selector == "00":
        return mat[0, 0] / scale
    if selector == "0j":
        return mat[0, 1] / scale
    if selector == "jj":
        return mat[1, 1] / scale
    if selector == "jk":
        return mat[1, 2] / scale if N >= 3 else None
    if selector == "first":
        return mat[0] / scale
    if selector == "rest":
        return mat[N - 1] / scale if N >= 3 else None
    raise KeyError(selector)


def check_conditional_cov(quick: bool = False) -> CheckResult:
    """Scaled conditional-covariance entries against the limit table at rho = 1e-3."""
    del quick
    worst = 0.0
    worst_key = None
    for N in (2, 3):
        hess = correlations.conditional_cov(_GAUSSIAN, N, 1e-3)
        limits = correlations.small_rho_limits(_GAUSSIAN, N)
        for (block, sel), key in _SCALED_ENTRIES.items():
            got = _scaled_entry(hess, block, sel, 1e-3)
            if got is None:
                continue
            rel = abs(got / limits[key] - 1.0)
            if rel > worst:
                worst, worst_key = rel, (N, block, sel)
    return CheckResult(
        "conditional-cov",
        worst <= 0.02,
        {"max_rel_err": f"{worst:.2e}", "at": worst_key},
    )


def check_corr_1d(quick: bool = False, seed=123) -> CheckResult:
    """1-D repulsion law and minima-minima quartic exponent."""
    scale = 10 if quick else 1
    coeff = correlations.corr_asymptote_total(_GAUSSIAN, 1, 1.0)
    worst = 0.0
    for rho in (0.005, 0.01, 0.02):
        est = correlations.corr_mc(
            _GAUSSIAN, 1, rho, samples=400_000 // scale, seed=(seed, 1)
        )
        worst = max(worst, abs(est.value / rho / coeff - 1.0))
    plan = [(0.05, 4_000_000), (0.1, 2_000_000), (0.2, 1_000_000), (0.5, 500_000)]
    ests = [
        correlations.corr_mc(
            _GAUSSIAN, 1, rho, index_pair=(0, 0), samples=max(n // scale, 10_000),
            seed=(seed, 2),
        )
        for rho, n in plan
    ]
    slope, slope_err = correlations.exponent_fit(ests)
    passed = worst <= 0.10 and abs(slope - 4.0) <= 0.3
    return CheckResult(
        "corr-1d",
        passed,
        {"coeff_rel_err": f"{worst:.3f}", "minmin_slope": f"{slope:.3f}+-{slope_err:.3f}"},
    )


def check_corr_neutrality_attraction(quick: bool = False, seed=456) -> CheckResult:
    """Dimension-2 neutrality at the predicted constant; dimension-3 attraction
    with the predicted inverse-separation exponent."""
    n = 100_000 if quick else 1_000_000
    target = correlations.corr_asymptote_total(_GAUSSIAN, 2, 1.0)
    worst = 0.0
    for rho in (0.02, 0.05, 0.1, 0.2):
        est = correlations.corr_mc(_GAUSSIAN, 2, rho, samples=n, seed=(seed, 1))
        worst = max(worst, abs(est.value / target - 1.0))
    ests = [
        correlations.corr_mc(_GAUSSIAN, 3, rho, samples=n, seed=(seed, 2))
        for rho in (0.02, 0.05, 0.1, 0.2)
    ]
    slope, slope_err = correlations.exponent_fit(ests)
    passed = worst <= 0.10 and abs(slope + 1.0) <= 0.15
    return CheckResult(
        "corr-neutrality-attraction",
        passed,
        {"n2_flatness": f"{worst:.3f}", "n3_slope": f"{slope:.3f}+-{slope_err:.3f}"},
    )


def check_repulsion_bounds(quick: bool = False, seed=789) -> CheckResult:
    """Fitted exponents of the extreme-index pairs stay above the bound."""
    n = 100_000 if quick else 1_000_000
    rhos = (0.08, 0.15, 0.3, 0.8)
    slopes = {}
    for pair in ((0, 2), (2, 2)):
        ests = [
            correlations.corr_mc(_GAUSSIAN, 2, rho, index_pair=pair, samples=n,
                                 seed=(seed, pair))
            for rho in rhos
        ]
        slopes[pair] = correlations.exponent_fit(ests)[0]
    passed = all(s >= 2.5 for s in slopes.values())
    return CheckResult(
        "repulsion-bounds",
        passed,
        {"minmax_slope": f"{slopes[(0, 2)]:.3f}", "maxmax_slope": f"{slopes[(2, 2)]:.3f}"},
    )


def check_field_simulation(quick: bool = False, seed=31415) -> CheckResult:
    """Simulated critical point density and index fractions, N = 2 and 3."""
    n2 = 6 if quick else 24
    recs2 = []
    area = 0.0
    for r in range(n2):
        grid = fields.synthesize(_GAUSSIAN, 2, 256, 0.125, seed=(seed, 2, r))
        recs2.extend(fields.detect_critical_points(grid))
        area += grid.volume
    density = len(recs2) / area
    target2 = counts.mean_count_total(_GAUSSIAN, 2)
    frac2, _ = fields.empirical_index_fractions(recs2, 2)
    want2 = np.array(counts.index_fractions(2))
    sig2 = np.sqrt(want2 * (1 - want2) / len(recs2))
    frac2_ok = bool(np.all(np.abs(frac2 - want2) <= 3.0 * sig2))

    n3 = 3 if quick else 12
    recs3 = []
    for r in range(n3):
        grid = fields.synthesize(_GAUSSIAN, 3, 64, 0.15, seed=(seed, 3, r))
        recs3.extend(fields.detect_critical_points(grid))
    frac3, _ = fields.empirical_index_fractions(recs3, 3)
    want3 = np.array(counts.index_fractions(3))
    sig3 = np.sqrt(want3 * (1 - want3) / len(recs3))
    frac3_ok = bool(np.all(np.abs(frac3 - want3) <= 3.0 * sig3))

    density_ok = abs(density / target2 - 1.0) <= 0.05
    return CheckResult(
        "field-simulation",
        density_ok and frac2_ok and frac3_ok,
        {
            "n2_density_rel_err": f"{abs(density / target2 - 1):.3f}",
            "n2_fracs": np.round(frac2, 4).tolist(),
            "n3_fracs": np.round(frac3, 4).tolist(),
            "n3_max_sigma": f"{float(np.max(np.abs(frac3 - want3) / sig3)):.2f}",
        },
    )


def check_level_counts(quick: bool = False) -> CheckResult:
    """Monotonicity in the level, the low-level limit, and continuity of the
    degenerate branch against the regular one."""
    del quick
    model = _REGULAR_MODEL
    N, k = 2, 1
    us = np.array([-30.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0])
    vals = np.array(
        [counts.mean_count_index_above(model, N, k, u) for u in us]
    )
    monotone = bool(np.all(np.diff(vals) <= 1e-12))
    base = counts.mean_count_index(model, N, k)
    low_u_err = abs(vals[0] - base)

    lam2 = 2.0
    degenerate = CovarianceModel.from_moments(lam2, 3.0 * lam2 * lam2)
    near = CovarianceModel.from_moments(lam2, 3.0 * lam2 * lam2 * (1.0 + 1e-8))
    gap = 0.0
    for u in (-1.0, 0.0, 1.0):
        a = counts.mean_count_index_above(degenerate, N, k, u)
        b = counts.mean_count_index_above(near, N, k, u)
        gap = max(gap, abs(a - b) / abs(a))
    passed = monotone and low_u_err <= 1e-9 and gap <= 1e-6
    return CheckResult(
        "level-counts",
        passed,
        {
            "monotone": monotone,
            "low_u_err": f"{low_u_err:.2e}",
            "branch_gap": f"{gap:.2e}",
        },
    )


CHECKS = {
    "goe-closed-forms": check_goe_closed_forms,
    "q32-gaussian": check_q32_gaussian,
    "sampling-ks": check_sampling_ks,
    "index-fractions": check_index_fractions,
    "gamma-constants": check_gamma_constants,
    "conditional-cov": check_conditional_cov,
    "corr-1d": check_corr_1d,
    "corr-neutrality-attraction": check_corr_neutrality_attraction,
    "repulsion-bounds": check_repulsion_bounds,
    "field-simulation": check_field_simulation,
    "level-counts": check_level_counts,
}

SUITES = {
    "quick": [
        "goe-closed-forms",
        "q32-gaussian",
        "index-fractions",
        "gamma-constants",
        "conditional-cov",
        "level-counts",
    ],
    "full": list(CHECKS),
}


def run_suite(suite: str = "quick", seed=None, verbose: bool = True) -> list:
    """Run a named suite; returns the list of :class:`CheckResult`.

    Progress lines go to stderr so stdout stays machine-readable.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    quick = suite == "quick"
    results = []
    for name in SUITES[suite]:
        fn = CHECKS[name]
        t0 = time.time()
        kwargs = {"quick": quick}
        if seed is not None and "seed" in fn.__code__.co_varnames:
            kwargs["seed"] = seed
        res = fn(**kwargs)
        res.runtime = time.time() - t0
        results.append(res)
        if verbose:
            print(res.summary(), file=sys.stderr)
    return results
