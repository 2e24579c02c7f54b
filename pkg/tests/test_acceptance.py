"""Acceptance suite: one test per criterion, printed pass/fail lines.

Runs every cross-validation check at its full budget and stated tolerance
(the quick variants exist only for the CLI smoke suite).  Run with
``pytest tests/test_acceptance.py -v -s`` to see the summary lines; the
whole module stays within the documented runtime budgets on a laptop.
"""

import time

import pytest

from critpoints import validation

_RESULTS = {}


def _run(name, budget_s=None, **kwargs):
    t0 = time.time()
    result = validation.CHECKS[name](quick=False, **kwargs)
    result.runtime = time.time() - t0
    _RESULTS[name] = result
    print(f"\n[acceptance] {result.summary()}")
    if budget_s is not None:
        assert result.runtime < budget_s, (
            f"{name} exceeded its runtime budget: {result.runtime:.0f}s > {budget_s}s"
        )
    assert result.passed, f"{name}: {result.details}"


def test_criterion_01_goe_closed_forms():
    """Pfaffian vs printed closed forms, sup gap <= 1e-6, norm within 1e-7."""
    _run("goe-closed-forms", budget_s=120)


def test_criterion_02_q32_is_gaussian():
    """Middle 3-GOE eigenvalue density equals the N(0,1/2) density to 1e-9."""
    _run("q32-gaussian")


def test_criterion_03_sampling_ks():
    """KS distance of 1e5 sampled ordered eigenvalues below the 1% critical
    value for every (N, k) with N = 2..5."""
    _run("sampling-ks", budget_s=300)


def test_criterion_04_index_fractions():
    """Fractions match the printed constants to 5e-4; quadrature cross-check
    of the dimension-4 product moment within 2e-3."""
    _run("index-fractions")


def test_criterion_05_gamma_constants():
    """gamma_0 = 1 exactly, gamma_1 = 4/3 to 1e-8 and within 3 sigma of a
    1e6-draw Monte Carlo; index partition to 1e-7 for n <= 4."""
    _run("gamma-constants")


def test_criterion_06_conditional_covariance():
    """Every nonzero scaled conditional-covariance entry within 2% of its
    limit coefficient at rho = 1e-3 (N = 2, 3)."""
    _run("conditional-cov", budget_s=60)


def test_criterion_07_one_dim_repulsion():
    """Linear repulsion coefficient within 10% at rho in {0.005, 0.01, 0.02};
    minima-minima exponent 4 +- 0.3."""
    _run("corr-1d")


def test_criterion_08_neutrality_and_attraction():
    """Dimension 2: flat at the predicted constant within 10% over
    [0.02, 0.2]; dimension 3: fitted exponent -1 +- 0.15 at 1e6 samples."""
    _run("corr-neutrality-attraction", budget_s=600)


def test_criterion_09_repulsion_bounds():
    """Extreme-pair exponents in dimension 2 stay above 2.5."""
    _run("repulsion-bounds")


def test_criterion_10_field_simulation():
    """Simulated density within 5% and index fractions within 3 sigma of the
    analytic values (N = 2 and reduced-grid N = 3)."""
    _run("field-simulation", budget_s=900)


def test_criterion_11_level_counts():
    """Level counts monotone; low-level limit to 1e-9; degenerate branch
    continuous with the regular branch to 1e-6 relative."""
    _run("level-counts")


@pytest.fixture(scope="session", autouse=True)
def _final_summary():
    yield
    if _RESULTS:
        print("\n" + "=" * 70)
        for result in _RESULTS.values():
            print(f"[acceptance] {result.summary()}")
        print("=" * 70)
