"""Exact Pfaffians of small skew-symmetric matrices.

The ordered-eigenvalue densities are sums of Pfaffians of skew matrices of
dimension at most 8 (rounded up to even), so a memoised cofactor expansion
is both exact in structure and effectively free at these sizes; no
tridiagonalisation is needed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SkewMatrix", "pfaffian", "MAX_DIM"]

#: Largest supported dimension; the eigenvalue densities need at most 8.
MAX_DIM = 12

#: Allowed relative deviation from exact skew-symmetry on construction.
SKEW_TOL = 1e-12


class SkewMatrix:
    """Even-dimensional real skew-symmetric matrix.

    Construction checks ``A = -A.T`` up to ``SKEW_TOL`` (relative to the
    largest entry) and then antisymmetrises exactly via ``(A - A.T)/2``;
    entries assembled from quadrature carry noise at that level.  Violations
    beyond the tolerance signal a bug in the upstream matrix assembly and
    raise instead of being repaired.
    """

    def __init__(self, entries, tol: float = SKEW_TOL):
        A = np.array(entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"skew matrix must be square, got shape {A.shape}")
        n = A.shape[0]
        if n % 2 != 0:
            raise ValueError(f"skew matrix dimension must be even, got {n}")
        if n > MAX_DIM:
            raise ValueError(f"dimension {n} exceeds supported maximum {MAX_DIM}")
        scale = max(1.0, float(np.max(np.abs(A))) if n else 1.0)
        if n and float(np.max(np.abs(A + A.T))) > tol * scale:
            raise ValueError("matrix is not skew-symmetric within tolerance")
        self.entries = 0.5 * (A - A.T)
        self.dim = n

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"SkewMatrix(dim={self.dim})"


def pfaffian(A) -> float:
    """Pfaffian by first-row cofactor expansion, memoised on index subsets.

    ``Pf(A) = sum_j (-1)**j a_{1j} Pf(A without rows/cols 1, j)`` with
    ``Pf([]) = 1``.  Memoisation over the 2**n index subsets makes the
    recursion cheap for the dimensions used here.
    """
    if not isinstance(A, SkewMatrix):
        A = SkewMatrix(A)
    mat = A.entries
    memo: dict[tuple, float] = {}

    def rec(idx: tuple) -> float:
        if not idx:
            return 1.0
        cached = memo.get(idx)
        if cached is not None:
            return cached
        i0 = idx[0]
        rest = idx[1:]
        total = 0.0
        sign = 1.0
        for pos, j in enumerate(rest):
            a = mat[i0, j]
            if a != 0.0:
                total += sign * a * rec(rest[:pos] + rest[pos + 1 :])
            sign = -sign
        memo[idx] = total
        return total

    return rec(tuple(range(A.dim)))
