"""Isotropic covariance models ``r(||s-t||**2)`` and their derivative structure.

A model is either *analytic* (the radial function and its first four
derivatives are available at any argument, which the finite-separation
correlation formulas need) or *moments-only* (just the spectral moments
``lambda_2 .. lambda_8``, enough for counts and small-separation
asymptotics).  Spectral moments, covariances of partial derivatives at a
single point, the independent-block decomposition of
``(X, grad X, hess X, third derivatives)``, and the moment-inequality
validation gate all live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelError",
    "CovarianceModel",
    "derivative_covariance",
    "zeta_block_covariances",
    "moment_inequality_check",
    "MomentInequalityReport",
    "parse_model_spec",
]


class ModelError(ValueError):
    """Invalid covariance model, or an operation unsupported by its kind."""


class CovarianceModel:
    """Radial covariance ``r`` with unit variance: ``r(0) = 1``.

    Use the factory methods :meth:`gaussian`, :meth:`from_moments` or
    :meth:`from_radial`.  Derivatives of user-supplied analytic models must
    be provided explicitly; exactness at 0 is load-bearing, so no numerical
    differentiation is attempted.
    """

    def __init__(self, kind, radial_deriv=None, moments=None, label="custom"):
        if kind not in ("analytic", "moments-only"):
            raise ModelError(f"unknown model kind {kind!r}")
        self.kind = kind
        self._radial_deriv = radial_deriv
        self.label = label
        if kind == "analytic":
            if abs(radial_deriv(0, 0.0) - 1.0) > 1e-12:
                raise ModelError("covariance must satisfy r(0) = 1")
            moments = {
                n: self._moment_from_derivative(n) for n in (1, 2, 3, 4)
            }
        self._moments = dict(moments or {})
        lam2 = self._moments.get(1)
        if lam2 is None or not lam2 > 0.0:
            raise ModelError("model requires lambda2 = -2 r'(0) > 0")
        for n, lam in self._moments.items():
            if lam is not None and not lam > 0.0:
                raise ModelError(f"spectral moment lambda_{2 * n} must be positive")

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian(cls, a: float = 1.0) -> "CovarianceModel":
        """Built-in analytic model ``r(x) = exp(-a x)``, a Schoenberg covariance."""
        if not a > 0.0:
            raise ModelError("gaussian model requires a > 0")

        def deriv(m, x):
            # np.exp preserves extended-precision input; the conditional
            # covariance blocks at small separation need the extra digits
            return (-a) ** m * np.exp(-a * x)

        return cls("analytic", radial_deriv=deriv, label=f"gaussian:a={a:g}")

    @classmethod
    def from_moments(cls, l2, l4, l6=None, l8=None) -> "CovarianceModel":
        """Moments-only model; ``l6``/``l8`` optional (operations may reject)."""
        moments = {1: float(l2), 2: float(l4)}
        if l6 is not None:
            moments[3] = float(l6)
        if l8 is not None:
            moments[4] = float(l8)
        return cls("moments-only", moments=moments, label="moments")

    @classmethod
    def from_radial(cls, radial_deriv, label="custom") -> "CovarianceModel":
        """Analytic model from ``radial_deriv(m, x) -> d^m r / dx^m`` for m = 0..4."""
        return cls("analytic", radial_deriv=radial_deriv, label=label)

    # -- evaluation --------------------------------------------------------

    def radial_deriv(self, m: int, x):
        """``m``-th derivative of the radial function at ``x`` (analytic only).

        The result keeps the precision of ``x``: extended-precision inputs
        give extended-precision outputs when the model supports them (the
        built-in Gaussian model does), which the conditional covariance
        blocks rely on at small separations.
        """
        if self.kind != "analytic":
            raise ModelError(
                "operation requires an analytic model (radial derivatives at "
                "finite separation); this model is moments-only"
            )
        if not 0 <= m <= 4:
            raise ModelError(f"radial derivative order {m} outside 0..4")
        return self._radial_deriv(m, x)

    def _moment_from_derivative(self, n: int) -> float:
        return float(
            (-1.0) ** n
            * math.factorial(2 * n)
            / math.factorial(n)
            * self._radial_deriv(n, 0.0)
        )

    def has_moment(self, n: int) -> bool:
        return self._moments.get(n) is not None

    def spectral_moment(self, n: int) -> float:
        """``lambda_{2n} = (-1)**n (2n)!/n! r^(n)(0)`` for n = 1..4; ``lambda_0 = 1``."""
        if n == 0:
            return 1.0
        if not 1 <= n <= 4:
            raise ModelError(f"spectral moment order {n} outside 1..4")
        lam = self._moments.get(n)
        if lam is None:
            raise ModelError(f"model does not provide lambda_{2 * n}")
        return lam

    @property
    def lambda2(self) -> float:
        return self.spectral_moment(1)

    @property
    def lambda4(self) -> float:
        return self.spectral_moment(2)

    @property
    def lambda6(self) -> float:
        return self.spectral_moment(3)

    @property
    def lambda8(self) -> float:
        return self.spectral_moment(4)

    def __repr__(self):
        return f"CovarianceModel({self.label})"


def derivative_covariance(model: CovarianceModel, i, j) -> float:
    """Covariance of two partial derivatives of the field at a single point.

    ``i`` and ``j`` are multi-indices (equal length = ambient dimension).
    The result is 0 whenever some component sum ``i_l + j_l`` is odd;
    otherwise, with ``beta_l = (i_l + j_l)/2`` and ``|beta|`` its sum,

        (-1)**(|beta| + |j|) * lambda_{2|beta|} * |beta|!/(2|beta|)!
            * prod_l (2 beta_l)! / beta_l!
    """
    i = tuple(int(v) for v in i)
    j = tuple(int(v) for v in j)
    if len(i) != len(j):
        raise ValueError("multi-indices must have equal length")
    if any(v < 0 for v in i + j) or any(v > 4 for v in i + j):
        raise ValueError("multi-index components must lie in 0..4")
    if any((a + b) % 2 for a, b in zip(i, j)):
        return 0.0
    beta = [(a + b) // 2 for a, b in zip(i, j)]
    order = sum(beta)
    if order > 4:
        raise ModelError(f"derivative order |beta| = {order} exceeds supported 4")
    lam = model.spectral_moment(order)
    value = (
        (-1.0) ** (order + sum(j))
        * lam
        * math.factorial(order)
        / math.factorial(2 * order)
    )
    for b in beta:
        value *= math.factorial(2 * b) / math.factorial(b)
    return value


def _e(N, pos, power):
    """Multi-index of length N with ``power`` at position ``pos`` (0-based)."""
    v = [0] * N
    v[pos] = power
    return tuple(v)


def _cov_matrix(model, indices):
    m = len(indices)
    out = np.empty((m, m))
    for a in range(m):
        for b in range(a, m):
            out[a, b] = out[b, a] = derivative_covariance(model, indices[a], indices[b])
    return out


def zeta_block_covariances(model: CovarianceModel, N: int) -> dict:
    """Variance matrices of the five independent Gaussian blocks.

    The vector ``(X, grad X, hess X, X_111, X_1jj, X_11l, X_1111)`` at a
    single point splits into independent blocks; the returned dict holds
    their variance matrices, each assembled entrywise from
    :func:`derivative_covariance`:

    * ``zeta1``: gradient components other than directions 1 and l
    * ``zeta2``: off-diagonal Hessian entries
    * ``zeta3``: ``(X, X_1111, X_11, X_22, ..., X_NN)``
    * ``zeta4``: ``(X_1, X_111, X_122, ..., X_1NN)``
    * ``zeta5``: ``(X_l, X_11l)`` for one transverse direction l
    """
    if N < 2:
        raise ValueError("block decomposition requires N >= 2")
    blocks = {}
    blocks["zeta1"] = model.lambda2 * np.eye(max(N - 2, 0))
    blocks["zeta2"] = (model.lambda4 / 3.0) * np.eye(N * (N - 1) // 2)

    z3 = [tuple([0] * N), _e(N, 0, 4), _e(N, 0, 2)]
    z3 += [_e(N, r, 2) for r in range(1, N)]
    blocks["zeta3"] = _cov_matrix(model, z3)

    z4 = [_e(N, 0, 1), _e(N, 0, 3)]
    for r in range(1, N):
        v = [0] * N
        v[0] = 1
        v[r] = 2
        z4.append(tuple(v))
    blocks["zeta4"] = _cov_matrix(model, z4)

    v5a = _e(N, 1, 1)
    v5b = [2, 1] + [0] * (N - 2)
    blocks["zeta5"] = _cov_matrix(model, [v5a, tuple(v5b)])
    return blocks


def hessian_diagonal_cov(model: CovarianceModel, N: int) -> np.ndarray:
    """``Var(X_11, ..., X_NN) = (2 lambda4/3) Id + (lambda4/3) J``."""
    return _cov_matrix(model, [_e(N, r, 2) for r in range(N)])


@dataclass(frozen=True)
class MomentInequalityReport:
    """Per-order result of the spectral-moment inequality validation."""

    N: int
    entries: tuple = field(default_factory=tuple)  # (n, lhs, rhs, margin)

    @property
    def passed(self) -> bool:
        return all(margin > 0.0 for (_, _, _, margin) in self.entries)


def moment_inequality_check(model: CovarianceModel, N: int) -> MomentInequalityReport:
    """Check ``lambda_{2n} lambda_{2n-4} > K(n,N) lambda_{2n-2}**2``.

    ``K(n,N) = (2n-1)/(2n-3) * (2n-4+N)/(2n-2+N)``.  Strict inequality is
    required: for N = 1 the equality case is the degenerate sine-cosine
    process, which the count formulas exclude.  Checks every n = 2..4 whose
    moments the model provides; report only, never raises.
    """
    entries = []
    for n in (2, 3, 4):
        if not model.has_moment(n):
            continue
        k_const = (2 * n - 1) / (2 * n - 3) * (2 * n - 4 + N) / (2 * n - 2 + N)
        lhs = model.spectral_moment(n) * model.spectral_moment(n - 2)
        rhs = k_const * model.spectral_moment(n - 1) ** 2
        entries.append((n, lhs, rhs, lhs - rhs))
    return MomentInequalityReport(N=N, entries=tuple(entries))


def parse_model_spec(spec: str) -> CovarianceModel:
    """Parse a model spec string.

    ``gaussian:a=<float>`` (default a = 1) or
    ``moments:l2=<f>,l4=<f>[,l6=<f>][,l8=<f>]``.
    """
    name, _, args = spec.partition(":")
    kv = {}
    if args:
        for item in args.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ModelError(f"malformed model argument {item!r} in {spec!r}")
            try:
                kv[key.strip()] = float(val)
            except ValueError as exc:
                raise ModelError(f"non-numeric value in model spec {spec!r}") from exc
    if name == "gaussian":
        unknown = set(kv) - {"a"}
        if unknown:
            raise ModelError(f"unknown gaussian parameters {sorted(unknown)}")
        return CovarianceModel.gaussian(a=kv.get("a", 1.0))
    if name == "moments":
        unknown = set(kv) - {"l2", "l4", "l6", "l8"}
        if unknown:
            raise ModelError(f"unknown moment parameters {sorted(unknown)}")
        if "l2" not in kv or "l4" not in kv:
            raise ModelError("moments model requires at least l2 and l4")
        return CovarianceModel.from_moments(
            kv["l2"], kv["l4"], kv.get("l6"), kv.get("l8")
        )
    raise ModelError(f"unknown model family {name!r} (use gaussian: or moments:)")
