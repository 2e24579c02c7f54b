"""GOE eigenvalue densities, ordered-eigenvalue laws, and sampling.

The density of the k-th ordered eigenvalue of an N-GOE matrix is assembled
from Pfaffians of skew matrices whose entries are Gaussian-weighted double
integrals over half-lines split at the evaluation point; the split side of
each row is controlled by a subset I of {1..N-1}, and the density sums the
Pfaffians over all subsets of size k-1.  The same construction with the
squared linear factor (alpha = 2) yields the restricted second determinant
moments used by the correlation asymptotics.

Closed forms for N <= 5 are tabulated separately and serve as an
independent cross-check of the Pfaffian path.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

from .pfaffian import SkewMatrix, pfaffian
from .quadrature import (
    DEFAULT_TOL,
    INFINITE_CUTOFF,
    Interval,
    gaussian_cdf,
    gaussian_partial_moments,
    gaussian_pdf,
    gaussian_sf,
    integrate_1d,
)

__all__ = [
    "normalization_constant",
    "joint_eigen_density",
    "build_skew_matrix",
    "ordered_eigen_density",
    "ordered_density_grid",
    "closed_form_density",
    "CLOSED_FORM_TABLE",
    "sample_goe_spectra",
    "sample_goe_spectrum",
    "symmetric_eigenvalues",
    "gamma2_indexed",
    "gamma2_total",
    "gamma_const",
    "gamma_const_indexed",
    "exp_moment_ordered",
]

#: Largest matrix size with density support: subset counts and Pfaffian
#: dimensions stay trivial up to here, and the count formulas in dimension 8
#: need the 9-GOE.
MAX_DENSITY_N = 9

#: Density values above this negative threshold are clipped to zero
#: (Pfaffian cancellation noise); anything below aborts.
NEGATIVE_CLIP = 1e-9

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normalization_constant(N: int) -> float:
    """Normalisation ``k_N`` of the joint GOE eigenvalue density."""
    if not 1 <= N <= MAX_DENSITY_N:
        raise ValueError(f"N must be in 1..{MAX_DENSITY_N}")
    log_kn = -0.5 * N * math.log(2.0 * math.pi) + N * math.lgamma(1.5)
    log_kn -= sum(math.lgamma(1.0 + 0.5 * i) for i in range(1, N + 1))
    return math.exp(log_kn)


def joint_eigen_density(mu) -> float:
    """Joint density of the (unordered) eigenvalues of an N-GOE matrix.

    ``k_N exp(-sum mu_i**2 / 2) prod_{i<j} |mu_j - mu_i|`` with N = len(mu).
    """
    mu = np.asarray(mu, dtype=float)
    N = mu.size
    val = normalization_constant(N) * math.exp(-0.5 * float(mu @ mu))
    for a in range(N):
        for b in range(a + 1, N):
            val *= abs(mu[b] - mu[a])
    return val


# ---------------------------------------------------------------------------
# Skew-matrix entries
# ---------------------------------------------------------------------------


class _EntryPool:
    """Lazy cache of skew-matrix entries at a fixed (alpha, n, ell).

    An entry depends on the subset I only through which side of ell each of
    its two row indices integrates over, so all subsets of all sizes share
    one pool: 4 variants per (i, j) pair plus 2 per border row.
    """

    def __init__(self, alpha: int, n: int, ell: float, tol: float = DEFAULT_TOL):
        self.alpha = alpha
        self.n = n
        self.ell = ell
        self.tol = tol
        self._singles: dict = {}
        self._doubles: dict = {}

    def _coeffs(self, i: int) -> np.ndarray:
        """Coefficients of ``x**(i-1) * (x - ell)**alpha`` over powers of x."""
        c = np.zeros(i + self.alpha)
        for r in range(self.alpha + 1):
            c[i - 1 + r] = math.comb(self.alpha, r) * (-self.ell) ** (self.alpha - r)
        return c

    def _domain(self, below: bool) -> Interval:
        # the truncation window widens to keep lo <= hi for |ell| > cutoff
        if below:
            return Interval(min(-INFINITE_CUTOFF, self.ell), self.ell)
        return Interval(self.ell, max(INFINITE_CUTOFF, self.ell))

    def single(self, i: int, below: bool) -> float:
        """``int_D x**(i-1) (x-ell)**alpha exp(-x**2/2) dx`` over one side."""
        key = (i, below)
        if key not in self._singles:
            c = self._coeffs(i)
            dom = self._domain(below)
            mom = gaussian_partial_moments(len(c) - 1, dom.lo, dom.hi)
            self._singles[key] = float(c @ mom)
        return self._singles[key]

    def double(self, i: int, j: int, below_i: bool, below_j: bool) -> float:
        """Signed double integral with x restricted to side ``below_i`` and
        y to side ``below_j`` of ell."""
        key = (i, j, below_i, below_j)
        if key in self._doubles:
            return self._doubles[key]
        if (i, below_i) == (j, below_j):
            value = 0.0  # antisymmetry on the diagonal variant
        elif below_i and not below_j:
            # x < ell < y everywhere, so the sign factor is +1
            value = self.single(i, True) * self.single(j, False)
        elif not below_i and below_j:
            value = -self.single(i, False) * self.single(j, True)
        else:
            value = self._double_same_side(i, j, below_i)
        self._doubles[key] = value
        # antisymmetry under exchanging the two rows
        self._doubles[(j, i, below_j, below_i)] = -value
        return value

    def _double_same_side(self, i: int, j: int, below: bool) -> float:
        """Outer adaptive integral over y; the inner x-integral is a signed
        difference of partial moments (x runs over the same side as y)."""
        ci = self._coeffs(i)
        cj = self._coeffs(j)
        dom = self._domain(below)
        total_i = self.single(i, below)
        kmax = len(ci) - 1
        inner_lo = dom.lo if below else self.ell

        def integrand(ys):
            mom = gaussian_partial_moments(kmax, inner_lo, ys)
            inner = ci @ mom  # int over x in (side-start, y)
            gy = (cj @ np.vstack([ys**p for p in range(len(cj))])) * np.exp(
                -0.5 * ys * ys
            )
            return gy * (2.0 * inner - total_i)

        return integrate_1d(integrand, dom, tol=self.tol)


def build_skew_matrix(alpha: int, n: int, subset, ell: float,
                      tol: float = DEFAULT_TOL, pool: _EntryPool | None = None) -> SkewMatrix:
    """Skew matrix for the ordered-eigenvalue construction.

    ``subset`` lists the rows (1-based, within 1..n) whose integration range
    is ``(-inf, ell)``; the others use ``(ell, +inf)``.  For odd ``n`` an
    extra border row/column of single integrals is appended so the dimension
    is always even.
    """
    if alpha not in (1, 2):
        raise ValueError("alpha must be 1 or 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    below = [False] * (n + 1)  # 1-based
    for idx in subset:
        if not 1 <= idx <= n:
            raise ValueError(f"subset element {idx} outside 1..{n}")
        below[idx] = True
    if pool is None:
        pool = _EntryPool(alpha, n, ell, tol)
    dim = n if n % 2 == 0 else n + 1
    A = np.zeros((dim, dim))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            A[i - 1, j - 1] = pool.double(i, j, below[i], below[j])
            A[j - 1, i - 1] = -A[i - 1, j - 1]
    if n % 2 == 1:
        for i in range(1, n + 1):
            A[i - 1, n] = pool.single(i, below[i])
            A[n, i - 1] = -A[i - 1, n]
    return SkewMatrix(A)


# ---------------------------------------------------------------------------
# Ordered-eigenvalue density
# ---------------------------------------------------------------------------


def _pfaffian_sum(alpha: int, n: int, subset_size: int, ell: float, tol: float) -> float:
    pool = _EntryPool(alpha, n, ell, tol)
    total = 0.0
    for subset in combinations(range(1, n + 1), subset_size):
        total += pfaffian(build_skew_matrix(alpha, n, subset, ell, tol, pool=pool))
    return total


def _q_all(N: int, ell: float, tol: float) -> np.ndarray:
    """Densities of all N ordered eigenvalues at ``ell``, sharing one pool."""
    n = N - 1
    pool = _EntryPool(1, n, ell, tol)
    pref = normalization_constant(N) * math.factorial(N) * math.exp(-0.5 * ell * ell)
    out = np.empty(N)
    for k in range(1, N + 1):
        total = 0.0
        for subset in combinations(range(1, n + 1), k - 1):
            total += pfaffian(build_skew_matrix(1, n, subset, ell, tol, pool=pool))
        out[k - 1] = pref * (-1.0) ** (k - 1) * total
    return out


def _clip_density(value: float, context: str) -> float:
    if value < -NEGATIVE_CLIP:
        raise ArithmeticError(
            f"{context} evaluated to {value:.3e} < -{NEGATIVE_CLIP:g}; "
            "skew-matrix assembly is inconsistent"
        )
    return value if value > 0.0 else 0.0


def ordered_eigen_density(N: int, k: int, ell: float, tol: float = DEFAULT_TOL) -> float:
    """Density of the k-th smallest eigenvalue of an N-GOE matrix (Pfaffian path).

    ``k_N N! (-1)**(k-1) exp(-ell**2/2)`` times the sum of Pfaffians over
    subsets of size k-1.  Tiny negative values from Pfaffian cancellation
    are clipped to 0; anything below ``-NEGATIVE_CLIP`` raises.
    """
    if not 2 <= N <= MAX_DENSITY_N:
        raise ValueError(f"N must be in 2..{MAX_DENSITY_N}")
    if not 1 <= k <= N:
        raise ValueError(f"k must be in 1..{N}")
    pref = normalization_constant(N) * math.factorial(N) * math.exp(-0.5 * ell * ell)
    value = pref * (-1.0) ** (k - 1) * _pfaffian_sum(1, N - 1, k - 1, ell, tol)
    return _clip_density(value, f"q_{N}^{k}({ell})")


def ordered_density_grid(N: int, ells, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Matrix ``q_N^k(ell)`` of shape (len(ells), N); one entry pool per ell."""
    if not 2 <= N <= MAX_DENSITY_N:
        raise ValueError(f"N must be in 2..{MAX_DENSITY_N}")
    ells = np.asarray(ells, dtype=float)
    out = np.empty((ells.size, N))
    for row, ell in enumerate(ells.ravel()):
        vals = _q_all(N, float(ell), tol)
        out[row] = [
            _clip_density(vals[k - 1], f"q_{N}^{k}({ell})") for k in range(1, N + 1)
        ]
    return out


# ---------------------------------------------------------------------------
# Printed closed forms for N <= 5
# ---------------------------------------------------------------------------


def _q22(l):
    return (
        np.exp(-0.5 * l * l)
        / (2.0 * math.sqrt(math.pi))
        * (np.exp(-0.5 * l * l) + _SQRT_2PI * l * gaussian_cdf(l))
    )


def _q32(l):
    return np.exp(-l * l) / math.sqrt(math.pi)


def _q33(l):
    return (
        np.exp(-0.5 * l * l)
        / (math.pi * math.sqrt(2.0))
        * (
            math.sqrt(math.pi) * (2.0 * l * l - 1.0) * gaussian_cdf(l * math.sqrt(2.0))
            + _SQRT_2PI * np.exp(-0.5 * l * l) * gaussian_cdf(l)
            + l * np.exp(-l * l)
        )
    )


def _q43(l):
    phi2 = gaussian_cdf(l * math.sqrt(2.0))
    return (
        np.exp(-0.5 * l * l)
        / (2.0 * math.pi)
        * (
            1.5 * l * np.exp(-1.5 * l * l)
            + _SQRT_2PI * (1.0 - 0.5 * l * l) * gaussian_sf(l) * np.exp(-l * l)
            - math.pi * (2.0 * l**3 - 3.0 * l) / math.sqrt(2.0) * phi2 * gaussian_sf(l)
            + 1.5 * math.sqrt(math.pi) * (1.0 + 2.0 * l * l) * phi2 * np.exp(-0.5 * l * l)
        )
    )


def _q44(l):
    phi2 = gaussian_cdf(l * math.sqrt(2.0))
    return (
        np.exp(-0.5 * l * l)
        / (2.0 * math.pi)
        * (
            1.5 * l * np.exp(-1.5 * l * l)
            - _SQRT_2PI * (1.0 - 0.5 * l * l) * gaussian_cdf(l) * np.exp(-l * l)
            + math.pi * (2.0 * l**3 - 3.0 * l) / math.sqrt(2.0) * phi2 * gaussian_cdf(l)
            + 1.5 * math.sqrt(math.pi) * (1.0 + 2.0 * l * l) * phi2 * np.exp(-0.5 * l * l)
        )
    )


def _q54(l):
    phi2 = gaussian_cdf(l * math.sqrt(2.0))
    poly = l**4 + 3.0 * l * l + 0.75
    return (
        math.sqrt(2.0)
        * np.exp(-0.5 * l * l)
        / (3.0 * math.pi**1.5)
        * (
            _SQRT_2PI * np.exp(-1.5 * l * l) * (0.5 * l**3 + 1.25 * l)
            + math.sqrt(2.0) * math.pi * phi2 * np.exp(-0.5 * l * l) * poly
        )
    )


def _q55(l):
    phi2 = gaussian_cdf(l * math.sqrt(2.0))
    phi1 = gaussian_cdf(l)
    poly = l**4 + 3.0 * l * l + 0.75
    return (
        math.sqrt(2.0)
        * np.exp(-0.5 * l * l)
        / (3.0 * math.pi**1.5)
        * (
            (2.0 * l**4 - 6.0 * l * l + 1.5) * math.pi * phi2**2
            + poly * math.sqrt(2.0) * math.pi * phi2 * phi1 * np.exp(-0.5 * l * l)
            + _SQRT_2PI * (0.5 * l**3 + 1.25 * l) * phi1 * np.exp(-1.5 * l * l)
            + (3.0 * l**3 - 6.5 * l) * math.sqrt(math.pi) * phi2 * np.exp(-l * l)
            + (l * l - 2.0) * np.exp(-2.0 * l * l)
        )
    )


def _q53(l):
    phi2 = gaussian_cdf(l * math.sqrt(2.0))
    rest = (
        math.sqrt(2.0)
        * np.exp(-0.5 * l * l)
        / (3.0 * math.pi**1.5)
        * (
            math.pi * (4.0 * l**4 - 12.0 * l * l + 3.0) * phi2
            + math.sqrt(math.pi) * (3.0 * l**3 - 6.5 * l) * np.exp(-l * l)
            + math.sqrt(2.0)
            * math.pi
            * (l**4 + 3.0 * l * l + 0.75)
            * np.exp(-0.5 * l * l)
            * gaussian_cdf(l)
        )
    )
    return _q54(l) - 2.0 * _q55(l) + rest


#: Directly printed densities; the remaining (N, k) pairs follow from the
#: reflection identity q_N^k(l) = q_N^{N+1-k}(-l).
CLOSED_FORM_TABLE = {
    (2, 2): _q22,
    (3, 2): _q32,
    (3, 3): _q33,
    (4, 3): _q43,
    (4, 4): _q44,
    (5, 3): _q53,
    (5, 4): _q54,
    (5, 5): _q55,
}


def closed_form_density(N: int, k: int, ell):
    """Tabulated closed-form q_N^k for N = 2..5 (vectorised in ell)."""
    if not 2 <= N <= 5 or not 1 <= k <= N:
        raise ValueError(f"no tabulated closed form for (N, k) = ({N}, {k})")
    ell = np.asarray(ell, dtype=float)
    if (N, k) in CLOSED_FORM_TABLE:
        out = CLOSED_FORM_TABLE[(N, k)](ell)
    else:
        out = CLOSED_FORM_TABLE[(N, N + 1 - k)](-ell)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Sampling and the cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------

#: Off-diagonal Frobenius threshold for Jacobi convergence.
JACOBI_TOL = 1e-12

_DEFAULT_CHUNK = 1 << 14


def symmetric_eigenvalues(mats, tol: float = JACOBI_TOL, max_sweeps: int = 40) -> np.ndarray:
    """Ascending eigenvalues of a batch of symmetric matrices via cyclic Jacobi.

    The rotation schedule is fixed (row-cyclic) and applied to the whole
    batch at once, so results are deterministic.  Iteration stops when every
    matrix has off-diagonal Frobenius norm below ``tol`` (relaxed to a few
    ulps of the matrix norm for badly scaled inputs).
    """
    A = np.array(mats, dtype=float)
    single = A.ndim == 2
    if single:
        A = A[None]
    m, n, n2 = A.shape
    if n != n2:
        raise ValueError("matrices must be square")
    if n == 1:
        vals = A[:, 0, 0].copy()[:, None]
        return vals[0] if single else vals
    scale = np.maximum(1.0, np.sqrt((A * A).sum(axis=(1, 2))))
    thresholds = np.maximum(tol, 64.0 * np.finfo(float).eps * scale)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = np.sqrt(np.maximum((A * A).sum(axis=(1, 2)) - (
            np.einsum("mii->mi", A) ** 2).sum(axis=1), 0.0))
        if np.all(off < thresholds):
            break
        for p, q in pairs:
            apq = A[:, p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            app = A[:, p, p]
            aqq = A[:, q, q]
            tau = np.where(active, (aqq - app) / np.where(active, 2.0 * apq, 1.0), 0.0)
            # hypot avoids overflow of tau**2 when apq is many orders smaller
            t = np.where(
                active,
                np.sign(tau + (tau == 0.0)) / (np.abs(tau) + np.hypot(1.0, tau)),
                0.0,
            )
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rot_p = c[:, None] * A[:, p, :] - s[:, None] * A[:, q, :]
            rot_q = s[:, None] * A[:, p, :] + c[:, None] * A[:, q, :]
            A[:, p, :] = rot_p
            A[:, q, :] = rot_q
            col_p = c[:, None] * A[:, :, p] - s[:, None] * A[:, :, q]
            col_q = s[:, None] * A[:, :, p] + c[:, None] * A[:, :, q]
            A[:, :, p] = col_p
            A[:, :, q] = col_q
            A[:, p, q] = 0.0
            A[:, q, p] = 0.0
    vals = np.sort(np.einsum("mii->mi", A), axis=1)
    return vals[0] if single else vals


def _goe_matrices(N: int, count: int, rng) -> np.ndarray:
    """Batch of GOE matrices: diagonal variance 1, off-diagonal variance 1/2."""
    g = rng.standard_normal((count, N, N))
    mats = (g + np.swapaxes(g, 1, 2)) / 2.0
    diag = rng.standard_normal((count, N))
    idx = np.arange(N)
    mats[:, idx, idx] = diag
    return mats


def sample_goe_spectra(
    N: int,
    n_samples: int,
    seed,
    chunk_size: int = _DEFAULT_CHUNK,
) -> np.ndarray:
    """``(n_samples, N)`` array of ascending GOE eigenvalue samples.

    Chunks draw from independent child seeds of ``seed``, so results are
    deterministic for a fixed (seed, chunk_size) pair and chunks could be
    processed in any order.
    """
    if not 1 <= N <= 64:
        raise ValueError("N must be in 1..64")
    n_chunks = (n_samples + chunk_size - 1) // chunk_size
    seqs = np.random.SeedSequence(seed).spawn(max(n_chunks, 1))
    out = np.empty((n_samples, N))
    start = 0
    for chunk, seq in zip(range(n_chunks), seqs):
        count = min(chunk_size, n_samples - start)
        rng = np.random.default_rng(seq)
        if N == 1:
            out[start : start + count] = rng.standard_normal((count, 1))
        else:
            out[start : start + count] = symmetric_eigenvalues(
                _goe_matrices(N, count, rng)
            )
        start += count
    return out


def sample_goe_spectrum(N: int, seed) -> np.ndarray:
    """Single sorted GOE spectrum."""
    return sample_goe_spectra(N, 1, seed)[0]


# ---------------------------------------------------------------------------
# Squared-determinant moments and gamma constants
# ---------------------------------------------------------------------------


def gamma2_indexed(n: int, k: int, x: float, tol: float = DEFAULT_TOL) -> float:
    """``E[det(G_n - x Id)**2 ; exactly k eigenvalues below x]``.

    Same Pfaffian construction as the densities with alpha = 2 and subsets
    of size k; no sign or Gaussian prefactor since the squared factors are
    nonnegative.  ``n = 0`` uses the empty-determinant convention.
    """
    if n < 0 or not 0 <= k <= max(n, 0):
        raise ValueError(f"need 0 <= k <= n, got (n, k) = ({n}, {k})")
    if n == 0:
        return 1.0
    if n > MAX_DENSITY_N - 1:
        raise ValueError(f"n must be <= {MAX_DENSITY_N - 1}")
    pref = normalization_constant(n) * math.factorial(n)
    return pref * _pfaffian_sum(2, n, k, x, tol)


def gamma2_total(n: int, x: float, tol: float = DEFAULT_TOL) -> float:
    """``E[det(G_n - x Id)**2]`` as the index partition sum."""
    return sum(gamma2_indexed(n, k, x, tol) for k in range(max(n, 0) + 1))


_GAMMA_SIGMA = 1.0 / math.sqrt(3.0)  # the shift variable has variance 1/3


@lru_cache(maxsize=None)
def gamma_const(n: int, tol: float = 1e-9) -> float:
    """``E[det(G_n - L Id)**2]`` with an independent centred L, Var(L) = 1/3."""
    if n == 0:
        return 1.0

    def integrand(zs):
        return np.array(
            [gamma2_total(n, _GAMMA_SIGMA * z, tol) for z in zs]
        ) * gaussian_pdf(zs)

    return integrate_1d(integrand, Interval(-math.inf, math.inf), tol=tol)


@lru_cache(maxsize=None)
def gamma_const_indexed(n: int, k: int, tol: float = 1e-9) -> float:
    """Same as :func:`gamma_const` restricted to matrices of index k."""
    if n == 0:
        return 1.0 if k == 0 else 0.0

    def integrand(zs):
        return np.array(
            [gamma2_indexed(n, k, _GAMMA_SIGMA * z, tol) for z in zs]
        ) * gaussian_pdf(zs)

    return integrate_1d(integrand, Interval(-math.inf, math.inf), tol=tol)


@lru_cache(maxsize=None)
def exp_moment_ordered(N: int, k: int, tol: float = 1e-10) -> float:
    """``E[exp(-L_k**2 / 2)]`` for the k-th ordered eigenvalue of an N-GOE."""

    def integrand(ells):
        return np.array(
            [ordered_eigen_density(N, k, ell) for ell in ells]
        ) * np.exp(-0.5 * ells * ells)

    return integrate_1d(integrand, Interval(-math.inf, math.inf), tol=tol)
