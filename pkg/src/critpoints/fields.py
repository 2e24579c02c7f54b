"""Field simulation lab: synthesis, critical-point detection, estimators.

Fields are synthesised on periodic grids by circulant embedding: the FFT of
the covariance kernel sampled on the torus gives the exact spectral
amplitudes, so each realisation has exactly the requested stationary
Gaussian law (up to floor-clipping of tiny negative spectral mass from
discretisation).  Critical points are located by scanning cells for sign
changes of every centred-difference gradient component, then polishing with
Newton iterations on a periodic quintic B-spline interpolant whose gradient
and Hessian are analytic; the Morse index comes from the interpolant
Hessian at the refined location.

Everything is toroidal, which keeps the pair-correlation estimator free of
edge corrections.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .covariance import CovarianceModel

__all__ = [
    "FieldGrid",
    "CriticalPointRecord",
    "DetectionDiagnostics",
    "EmbeddingError",
    "synthesize",
    "detect_critical_points",
    "empirical_index_fractions",
    "empirical_pair_correlation",
    "PairCorrelationEstimate",
    "save_grid",
    "load_grid",
]

#: Memory cap on the number of grid nodes.
MAX_GRID_NODES = 1 << 27

#: Negative spectral mass above this fraction of the total aborts synthesis.
NEGATIVE_MASS_TOL = 1e-6

#: Covariance must decay below this at half the domain width.
SUPPORT_TOL = 1e-8

#: Gradient norm (physical units) required of a refined critical point.
GRADIENT_TOL = 1e-8

#: Snapshot file magic.
_MAGIC = b"CPLB"
_SNAPSHOT_VERSION = 1


class EmbeddingError(RuntimeError):
    """Circulant embedding failed (domain too small or spectrum too negative)."""


@dataclass(frozen=True)
class FieldGrid:
    """A realisation of the field on a periodic grid.

    ``values`` has shape ``(side,) * N``; physical coordinates of node
    ``i`` are ``i * spacing`` per axis, and the domain is a torus of side
    ``side * spacing``.
    """

    N: int
    side: int
    spacing: float
    values: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        if self.values.shape != (self.side,) * self.N:
            raise ValueError("values shape does not match (side,) * N")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def extent(self) -> float:
        return self.side * self.spacing

    @property
    def volume(self) -> float:
        return self.extent**self.N


@dataclass(frozen=True)
class CriticalPointRecord:
    """A refined critical point: location, value, Morse index, Hessian spectrum."""

    location: np.ndarray
    value: float
    index: int
    hessian_eigs: np.ndarray
    grad_norm: float


@dataclass
class DetectionDiagnostics:
    """Tallies from a detection pass."""

    candidates: int = 0
    newton_failures: int = 0
    degenerate_discards: int = 0
    duplicates_merged: int = 0


def _radial_values(model: CovarianceModel, x: np.ndarray) -> np.ndarray:
    """Vectorised r(x); falls back to a scalar loop for scalar-only models."""
    try:
        out = np.asarray(model.radial_deriv(0, x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    flat = np.array([model.radial_deriv(0, float(v)) for v in x.ravel()])
    return flat.reshape(x.shape)


def synthesize(
    model: CovarianceModel, N: int, side: int, spacing: float, seed
) -> FieldGrid:
    """Draw one field realisation by circulant-embedding spectral synthesis.

    Requires the covariance to be effectively supported within half the
    periodic domain (``r((L/2)**2) < SUPPORT_TOL``); tiny negative spectral
    mass (below ``NEGATIVE_MASS_TOL`` of the total) is floor-clipped,
    anything larger raises :class:`EmbeddingError`.
    """
    if not 1 <= N <= 3:
        raise ValueError("synthesis supports N = 1..3")
    if side < 4 or side & (side - 1):
        raise ValueError("side must be a power of two >= 4")
    if side**N > MAX_GRID_NODES:
        raise ValueError(f"side**N exceeds the {MAX_GRID_NODES} node cap")
    if not spacing > 0.0:
        raise ValueError("spacing must be positive")
    half_width = 0.5 * side * spacing
    tail = float(_radial_values(model, np.array([half_width**2]))[0])
    if abs(tail) >= SUPPORT_TOL:
        raise EmbeddingError(
            f"covariance not supported in half the domain: "
            f"r((L/2)**2) = {tail:.3e} >= {SUPPORT_TOL:g}; enlarge side or spacing"
        )

    axis = np.minimum(np.arange(side), side - np.arange(side)) * spacing
    sq = axis**2
    for _ in range(N - 1):
        sq = sq[..., None] + axis**2
    kernel = _radial_values(model, sq)

    spectrum = np.fft.fftn(kernel).real
    negative = -spectrum[spectrum < 0.0].sum()
    total = np.abs(spectrum).sum()
    if negative > NEGATIVE_MASS_TOL * total:
        raise EmbeddingError(
            f"negative spectral mass {negative / total:.3e} of total exceeds "
            f"{NEGATIVE_MASS_TOL:g}; the kernel does not embed on this torus"
        )
    root = np.sqrt(np.clip(spectrum, 0.0, None))

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((side,) * N)
    values = np.fft.ifftn(root * np.fft.fftn(noise)).real
    grid = FieldGrid(N=N, side=side, spacing=spacing, values=values)
    var = float(values.var())
    # sampling std of the empirical variance on this torus; only deviations
    # beyond both the 10% band and 4 sigma indicate a synthesis problem
    var_of_var = 2.0 * float((kernel**2).mean())
    if abs(var - 1.0) > max(0.1, 4.0 * math.sqrt(var_of_var)):
        warnings.warn(
            f"empirical variance {var:.3f} deviates from 1 beyond sampling "
            "error; domain may be too small relative to the correlation length",
            stacklevel=2,
        )
    return grid


# ---------------------------------------------------------------------------
# Periodic quintic B-spline interpolation
# ---------------------------------------------------------------------------

# Interior filter: cardinal quintic B-spline at integer offsets 0, 1, 2.
_B5_AT_INT = (66.0 / 120.0, 26.0 / 120.0, 1.0 / 120.0)


def _bspline5(t: np.ndarray):
    """Quintic B-spline value, first and second derivative at ``t``."""
    r = np.abs(t)
    sign = np.sign(t)
    r2 = r * r
    r3 = r2 * r
    r4 = r3 * r
    r5 = r4 * r
    m3 = np.clip(3.0 - r, 0.0, None)
    c1 = r < 1.0
    c2 = (r >= 1.0) & (r < 2.0)
    c3 = (r >= 2.0) & (r < 3.0)
    val = (
        np.where(c1, 66.0 - 60.0 * r2 + 30.0 * r4 - 10.0 * r5, 0.0)
        + np.where(c2, 51.0 + 75.0 * r - 210.0 * r2 + 150.0 * r3 - 45.0 * r4 + 5.0 * r5, 0.0)
        + np.where(c3, m3**5, 0.0)
    ) / 120.0
    dr = (
        np.where(c1, -120.0 * r + 120.0 * r3 - 50.0 * r4, 0.0)
        + np.where(c2, 75.0 - 420.0 * r + 450.0 * r2 - 180.0 * r3 + 25.0 * r4, 0.0)
        + np.where(c3, -5.0 * m3**4, 0.0)
    ) / 120.0
    ddr = (
        np.where(c1, -120.0 + 360.0 * r2 - 200.0 * r3, 0.0)
        + np.where(c2, -420.0 + 900.0 * r - 540.0 * r2 + 100.0 * r3, 0.0)
        + np.where(c3, 20.0 * m3**3, 0.0)
    ) / 120.0
    return val, sign * dr, ddr


class SplineInterpolant:
    """C4 periodic tensor-product quintic B-spline through the grid values.

    The prefilter is diagonal in Fourier space on a periodic grid, so the
    spline interpolates the data exactly; values, gradients and Hessians in
    physical units come from analytic kernel derivatives.
    """

    def __init__(self, grid: FieldGrid):
        self.grid = grid
        n = grid.side
        freqs = 2.0 * math.pi * np.fft.fftfreq(n)
        denom_1d = (
            _B5_AT_INT[0]
            + 2.0 * _B5_AT_INT[1] * np.cos(freqs)
            + 2.0 * _B5_AT_INT[2] * np.cos(2.0 * freqs)
        )
        spec = np.fft.fftn(grid.values)
        for d in range(grid.N):
            shape = [1] * grid.N
            shape[d] = n
            spec = spec / denom_1d.reshape(shape)
        self.coef = np.fft.ifftn(spec).real

    def evaluate(self, points: np.ndarray):
        """Value, gradient and Hessian at ``points`` (shape (m, N), physical).

        Positions wrap periodically.  Gradient has shape (m, N), Hessian
        (m, N, N); both are in physical units.
        """
        grid = self.grid
        n, N, h = grid.side, grid.N, grid.spacing
        pts = np.atleast_2d(np.asarray(points, dtype=float)) / h
        m = pts.shape[0]
        base = np.floor(pts).astype(int)
        frac = pts - base

        offsets = np.arange(-2, 4)
        bval = np.empty((N, 6, m))
        bd1 = np.empty((N, 6, m))
        bd2 = np.empty((N, 6, m))
        nodes = np.empty((N, 6, m), dtype=int)
        for d in range(N):
            for oi, o in enumerate(offsets):
                v, d1, d2 = _bspline5(frac[:, d] - o)
                bval[d, oi] = v
                bd1[d, oi] = d1
                bd2[d, oi] = d2
                nodes[d, oi] = (base[:, d] + o) % n

        value = np.zeros(m)
        grad = np.zeros((m, N))
        hess = np.zeros((m, N, N))
        coef = self.coef
        for combo in np.ndindex(*(6,) * N):
            c = coef[tuple(nodes[d, combo[d]] for d in range(N))]
            w = np.ones(m)
            for d in range(N):
                w = w * bval[d, combo[d]]
            value += c * w
            for d in range(N):
                wd = np.ones(m)
                for e in range(N):
                    wd = wd * (bd1[e, combo[e]] if e == d else bval[e, combo[e]])
                grad[:, d] += c * wd
            for d in range(N):
                for e in range(d, N):
                    wde = np.ones(m)
                    for f in range(N):
                        if f == d == e:
                            wde = wde * bd2[f, combo[f]]
                        elif f in (d, e):
                            wde = wde * bd1[f, combo[f]]
                        else:
                            wde = wde * bval[f, combo[f]]
                    hess[:, d, e] += c * wde
        for d in range(N):
            for e in range(d + 1, N):
                hess[:, e, d] = hess[:, d, e]
        return value, grad / h, hess / (h * h)


# ---------------------------------------------------------------------------
# Critical point detection
# ---------------------------------------------------------------------------


def _candidate_cells(grid: FieldGrid) -> np.ndarray:
    """Boolean mask of cells whose every centred-difference gradient
    component takes both signs over the cell corners."""
    N = grid.N
    mask = np.ones((grid.side,) * N, dtype=bool)
    for d in range(N):
        g = np.roll(grid.values, -1, axis=d) - np.roll(grid.values, 1, axis=d)
        has_pos = np.zeros_like(mask)
        has_neg = np.zeros_like(mask)
        for corner in np.ndindex(*(2,) * N):
            shifted = g
            for e, s in enumerate(corner):
                if s:
                    shifted = np.roll(shifted, -1, axis=e)
            has_pos |= shifted >= 0.0
            has_neg |= shifted <= 0.0
        mask &= has_pos & has_neg
    return mask


def detect_critical_points(
    grid: FieldGrid,
    max_newton_iter: int = 40,
    return_diagnostics: bool = False,
    lambda2: float | None = None,
):
    """Locate, refine and classify all critical points of a realisation.

    Cells where every centred-difference gradient component changes sign
    seed Newton iterations on the quintic spline interpolant; candidates are
    polished until the physical gradient norm is at most ``GRADIENT_TOL``,
    deduplicated within half a grid spacing (keeping the smaller gradient
    norm), and classified by the interpolant Hessian.  Diverged Newton runs
    and near-degenerate Hessians are dropped and tallied.

    Pass the model's ``lambda2`` to get a warning when the spacing exceeds
    the recommended ``0.2 / sqrt(lambda2)`` resolution bound.
    """
    if lambda2 is not None and grid.spacing > 0.2 / math.sqrt(lambda2):
        warnings.warn(
            f"grid spacing {grid.spacing:g} exceeds the recommended "
            f"0.2/sqrt(lambda2) = {0.2 / math.sqrt(lambda2):g}; "
            "detection may miss close critical point pairs",
            stacklevel=2,
        )
    spline = SplineInterpolant(grid)
    diag = DetectionDiagnostics()
    h = grid.spacing
    L = grid.extent
    N = grid.N

    mask = _candidate_cells(grid)
    cells = np.argwhere(mask)
    diag.candidates = len(cells)
    if len(cells) == 0:
        out = []
        return (out, diag) if return_diagnostics else out

    pos = (cells + 0.5) * h
    start = pos.copy()
    active = np.ones(len(pos), dtype=bool)
    failed = np.zeros(len(pos), dtype=bool)
    for _ in range(max_newton_iter):
        if not active.any():
            break
        idx = np.where(active)[0]
        _, grad, hess = spline.evaluate(pos[idx])
        gnorm = np.linalg.norm(grad, axis=1)
        done = gnorm <= GRADIENT_TOL
        active[idx[done]] = False
        live = idx[~done]
        if live.size == 0:
            continue
        g = grad[~done]
        hs = hess[~done]
        try:
            step = np.linalg.solve(hs, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.array(
                [np.linalg.lstsq(hh, gg, rcond=None)[0] for hh, gg in zip(hs, g)]
            )
        pos[live] -= step
        # wrap and drop runaways (left the neighbourhood of the seed cell)
        pos[live] %= L
        drift = np.abs(pos[live] - start[live])
        drift = np.minimum(drift, L - drift)
        runaway = np.any(drift > 2.5 * h, axis=1) | ~np.all(
            np.isfinite(pos[live]), axis=1
        )
        failed[live[runaway]] = True
        active[live[runaway]] = False
        pos[live[runaway]] = start[live[runaway]]
    failed |= active  # exhausted the iteration budget
    diag.newton_failures = int(failed.sum())

    keep = ~failed
    pos = pos[keep] % L
    if len(pos) == 0:
        out = []
        return (out, diag) if return_diagnostics else out
    value, grad, hess = spline.evaluate(pos)
    gnorm = np.linalg.norm(grad, axis=1)

    # deduplicate on the torus, preferring the smaller gradient norm
    order = np.argsort(gnorm)
    tree = cKDTree(pos[order], boxsize=L)
    pairs = tree.query_pairs(r=0.5 * h, output_type="ndarray")
    drop = np.zeros(len(order), dtype=bool)
    for a, b in pairs[np.argsort(pairs.min(axis=1))]:
        lo, hi = (a, b) if a < b else (b, a)
        if not drop[lo]:
            drop[hi] = True
    diag.duplicates_merged = int(drop.sum())
    chosen = order[~drop]

    eigs = np.linalg.eigvalsh(hess[chosen])
    records = []
    for row, ci in enumerate(chosen):
        e = eigs[row]
        if np.abs(e).min() <= 1e-10 * np.abs(e).max():
            diag.degenerate_discards += 1
            continue
        records.append(
            CriticalPointRecord(
                location=pos[ci].copy(),
                value=float(value[ci]),
                index=int((e < 0.0).sum()),
                hessian_eigs=e.copy(),
                grad_norm=float(gnorm[ci]),
            )
        )
    return (records, diag) if return_diagnostics else records


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def empirical_index_fractions(records, N: int, z: float = 1.96):
    """Multinomial index fractions with Wilson score intervals.

    ``records`` is a flat sequence of :class:`CriticalPointRecord`; needs at
    least 1000 of them.  Returns ``(fractions, intervals)`` with intervals
    of shape (N+1, 2).
    """
    n = len(records)
    if n < 1000:
        raise ValueError(f"need at least 1000 records, got {n}")
    counts = np.zeros(N + 1)
    for rec in records:
        if not 0 <= rec.index <= N:
            raise ValueError(f"record index {rec.index} outside 0..{N}")
        counts[rec.index] += 1
    fractions = counts / n
    z2 = z * z
    center = (fractions + z2 / (2 * n)) / (1 + z2 / n)
    half = (
        z
        * np.sqrt(fractions * (1 - fractions) / n + z2 / (4 * n * n))
        / (1 + z2 / n)
    )
    intervals = np.column_stack([center - half, center + half])
    return fractions, intervals


def _ball_volume(N: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0) * r**N


@dataclass(frozen=True)
class PairCorrelationEstimate:
    """Binned second-moment estimates of the critical point process."""

    bin_edges: np.ndarray
    bin_centers: np.ndarray
    #: second-moment density estimate per bin (comparable to A(rho))
    a_value: np.ndarray
    a_error: np.ndarray
    #: intensity-normalised profile (1 for a Poisson process)
    g_value: np.ndarray
    g_error: np.ndarray
    counts: np.ndarray
    empty_bins: np.ndarray
    realizations: int
    intensity: float
    bin_width: float


def _locations(one_realization) -> np.ndarray:
    if len(one_realization) and isinstance(one_realization[0], CriticalPointRecord):
        return np.array([r.location for r in one_realization])
    return np.asarray(one_realization, dtype=float)


def empirical_pair_correlation(
    realizations,
    extent: float,
    bin_edges,
    index_pair: tuple | None = None,
) -> PairCorrelationEstimate:
    """Pair-count estimator of the correlation function on the torus.

    ``realizations`` is a list of per-realisation point sets (sequences of
    records, or (m, N) location arrays; records are required when
    ``index_pair`` is given).  Counts are normalised by shell volume and by
    the unbiased squared-intensity estimator, then averaged across
    realisations with errors from the across-realisation scatter.  Empty
    bins are flagged, never interpolated.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin_edges must be increasing with at least two entries")
    if edges[-1] > 0.5 * extent:
        raise ValueError("largest bin edge exceeds half the torus extent")
    n_real = len(realizations)
    if n_real == 0:
        raise ValueError("need at least one realisation")

    first = _locations(realizations[0])
    N = first.shape[1] if first.ndim == 2 else 1
    shells = np.diff(_ball_volume(N, edges))
    volume = extent**N

    a_rows, g_rows, count_rows, n_points = [], [], [], 0
    for one in realizations:
        pts = _locations(one)
        if index_pair is None:
            pts1 = pts2 = np.atleast_2d(pts) % extent
        else:
            recs = list(one)
            if recs and not isinstance(recs[0], CriticalPointRecord):
                raise ValueError(
                    "index-restricted pair correlation needs CriticalPointRecord "
                    "inputs, not bare location arrays"
                )
            i1, i2 = index_pair
            pts1 = np.array([r.location for r in recs if r.index == i1]) % extent
            pts2 = np.array([r.location for r in recs if r.index == i2]) % extent
        m1 = len(pts1)
        m2 = len(pts2)
        n_points += len(pts)
        if m1 == 0 or m2 == 0:
            a_rows.append(np.zeros(shells.size))
            g_rows.append(np.zeros(shells.size))
            count_rows.append(np.zeros(shells.size))
            continue
        t1 = cKDTree(pts1, boxsize=extent)
        t2 = cKDTree(pts2, boxsize=extent)
        cum = t1.count_neighbors(t2, edges)
        same = index_pair is None or index_pair[0] == index_pair[1]
        if same and edges[0] == 0.0:
            cum = cum - m1  # self pairs at distance zero
        counts = np.diff(cum).astype(float)  # ordered pairs per bin
        pair_norm = m1 * (m1 - 1) if same else m1 * m2
        a_rows.append(counts / (volume * shells))
        with np.errstate(invalid="ignore", divide="ignore"):
            g_rows.append(counts * volume / (pair_norm * shells) if pair_norm else np.zeros(shells.size))
        count_rows.append(counts)

    a_rows = np.asarray(a_rows)
    g_rows = np.asarray(g_rows)
    counts = np.asarray(count_rows).sum(axis=0)
    denom = math.sqrt(max(n_real - 1, 1)) * math.sqrt(n_real)
    return PairCorrelationEstimate(
        bin_edges=edges,
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        a_value=a_rows.mean(axis=0),
        a_error=a_rows.std(axis=0, ddof=1) / math.sqrt(n_real) if n_real > 1 else np.full(shells.size, np.inf),
        g_value=g_rows.mean(axis=0),
        g_error=g_rows.std(axis=0, ddof=1) / math.sqrt(n_real) if n_real > 1 else np.full(shells.size, np.inf),
        counts=counts,
        empty_bins=counts == 0,
        realizations=n_real,
        intensity=n_points / (n_real * volume),
        bin_width=float(np.diff(edges).mean()),
    )


# ---------------------------------------------------------------------------
# Grid snapshots
# ---------------------------------------------------------------------------


def save_grid(grid: FieldGrid, path) -> None:
    """Write a grid snapshot: 'CPLB', version, N, side (uint32 LE), spacing
    (float64 LE), then the values as row-major float64."""
    header = _MAGIC + struct.pack(
        "<III d", _SNAPSHOT_VERSION, grid.N, grid.side, grid.spacing
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def load_grid(path) -> FieldGrid:
    """Read a snapshot written by :func:`save_grid`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a grid snapshot (magic {magic!r})")
        version, N, side = struct.unpack("<III", fh.read(12))
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        (spacing,) = struct.unpack("<d", fh.read(8))
        data = np.frombuffer(fh.read(8 * side**N), dtype="<f8").reshape((side,) * N)
    return FieldGrid(N=N, side=side, spacing=spacing, values=data.copy())
