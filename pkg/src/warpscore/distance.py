"""Distance kernels: lockstep, constrained DTW with path extraction, SoftDTW.

DTW here is the dependent multivariate form: one local cost per cell,
aggregated across all variables, so a single warping path aligns every
channel. Cost matrices use rows for the first series and columns for the
second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import MultiSeries
from .errors import DimensionMismatch, InfeasibleBand, LengthMismatch, SeriesTooLong

METRIC_IDS = {
    "euclidean": _kernels.EUCLIDEAN,
    "sqeuclidean": _kernels.SQEUCLIDEAN,
    "squared-euclidean": _kernels.SQEUCLIDEAN,
    "manhattan": _kernels.MANHATTAN,
}

#: Largest n*m for which full cost matrices are materialized.
MAX_FULL_CELLS = 4000 * 4000


def _metric_id(metric: str) -> int:
    try:
        return METRIC_IDS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}, expected one of {sorted(set(METRIC_IDS))}") from None


@dataclass(frozen=True)
class ConstraintBand:
    """Global warping-path constraint: none, a Sakoe-Chiba band or an Itakura parallelogram."""

    kind: str = "none"
    radius: int = 0
    slope: float = 2.0

    def __post_init__(self):
        if self.kind not in ("none", "sakoe-chiba", "itakura"):
            raise ValueError(f"unknown band kind {self.kind!r}")
        if self.kind == "sakoe-chiba" and self.radius < 0:
            raise ValueError("sakoe-chiba radius must be >= 0")
        if self.kind == "itakura" and not self.slope > 1.0:
            raise ValueError("itakura slope must be > 1")

    @classmethod
    def none(cls) -> "ConstraintBand":
        return cls("none")

    @classmethod
    def sakoe_chiba(cls, radius: int) -> "ConstraintBand":
        return cls("sakoe-chiba", radius=int(radius))

    @classmethod
    def itakura(cls, slope: float = 2.0) -> "ConstraintBand":
        return cls("itakura", slope=float(slope))

    def describe(self) -> str:
        if self.kind == "sakoe-chiba":
            return f"sakoe-chiba(radius={self.radius})"
        if self.kind == "itakura":
            return f"itakura(slope={self.slope})"
        return "none"


@dataclass(frozen=True, eq=False)
class WarpResult:
    """A DTW alignment: distance, local and cumulative cost matrices, warping path."""

    distance: float
    lcm: np.ndarray
    ccm: np.ndarray
    path: np.ndarray  # (k, 2) int64, 0-indexed, starts (0,0), ends (n-1, m-1)

    @property
    def path_length(self) -> int:
        return self.path.shape[0]

    @property
    def normalized_distance(self) -> float:
        return self.distance / self.path.shape[0]


def local_cost(x, y, metric: str = "euclidean") -> float:
    """Pointwise cost between two V-dimensional samples."""
    xv = np.atleast_1d(np.asarray(x, dtype=np.float64))
    yv = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if xv.shape != yv.shape:
        raise DimensionMismatch(f"samples have shapes {xv.shape} and {yv.shape}")
    mid = _metric_id(metric)
    return float(_kernels._cell_cost(xv[None, :], yv[None, :], 0, 0, mid))


def lockstep_distance(a: MultiSeries, b: MultiSeries) -> float:
    """Equal-length distance: per-step Euclidean cost across variables, summed over steps."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"series have {a.n_vars} and {b.n_vars} variables")
    if a.n != b.n:
        raise LengthMismatch(f"series have lengths {a.n} and {b.n}")
    diff = a.values - b.values
    return float(np.sqrt((diff * diff).sum(axis=1)).sum())


def band_bounds(n: int, m: int, band: ConstraintBand | None):
    """Per-row feasible column interval [lo[i], hi[i]] for the given constraint.

    Raises InfeasibleBand when some row admits no cell (the constraint cannot
    connect the two corners).
    """
    if band is None or band.kind == "none":
        lo = np.zeros(n, dtype=np.int64)
        hi = np.full(n, m - 1, dtype=np.int64)
        return lo, hi
    if band.kind == "sakoe-chiba":
        r = band.radius
        if abs(n - m) > r:
            raise InfeasibleBand(f"sakoe-chiba radius {r} cannot align lengths ({n}, {m})")
        idx = np.arange(n, dtype=np.int64)
        lo = np.maximum(0, idx - r)
        hi = np.minimum(m - 1, idx + r)
        return lo, hi
    # Itakura: cells reachable from both corners under accumulated slopes in [1/s, s]
    s = band.slope
    i = np.arange(n, dtype=np.float64)
    lo_f = np.maximum(i / s, (m - 1) - s * (n - 1 - i))
    hi_f = np.minimum(s * i, (m - 1) - (n - 1 - i) / s)
    lo = np.ceil(lo_f - 1e-9).astype(np.int64)
    hi = np.floor(hi_f + 1e-9).astype(np.int64)
    if np.any(lo > hi):
        raise InfeasibleBand(f"itakura slope {s} cannot align lengths ({n}, {m})")
    lo = np.clip(lo, 0, m - 1)
    hi = np.clip(hi, 0, m - 1)
    return lo, hi


def _check_pair(a: MultiSeries, b: MultiSeries):
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"series have {a.n_vars} and {b.n_vars} variables")


def _backtrack(ccm: np.ndarray) -> np.ndarray:
    n, m = ccm.shape
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        # deterministic tie-break: diagonal, then vertical, then horizontal
        best = math.inf
        step = None
        if i > 0 and j > 0 and ccm[i - 1, j - 1] < best:
            best = ccm[i - 1, j - 1]
            step = (i - 1, j - 1)
        if i > 0 and ccm[i - 1, j] < best:
            best = ccm[i - 1, j]
            step = (i - 1, j)
        if j > 0 and ccm[i, j - 1] < best:
            best = ccm[i, j - 1]
            step = (i, j - 1)
        i, j = step
        path.append((i, j))
    path.reverse()
    return np.asarray(path, dtype=np.int64)


def dtw(a: MultiSeries, b: MultiSeries, band: ConstraintBand | None = None, metric: str = "euclidean") -> WarpResult:
    """Dependent multivariate DTW with full matrices and path extraction.

    Memory is O(n*m); pairs above MAX_FULL_CELLS must use dtw_distance,
    which keeps only two rows.
    """
    _check_pair(a, b)
    n, m = a.n, b.n
    if n * m > MAX_FULL_CELLS:
        raise SeriesTooLong(f"{n}x{m} cost matrix exceeds the full-matrix cap; use dtw_distance")
    lo, hi = band_bounds(n, m, band)
    lcm = _kernels.local_cost_matrix(a.values, b.values, _metric_id(metric))
    ccm = _kernels.fill_ccm(lcm, lo, hi)
    dist = float(ccm[n - 1, m - 1])
    if not math.isfinite(dist):
        raise InfeasibleBand(f"constraint excludes every path for lengths ({n}, {m})")
    return WarpResult(distance=dist, lcm=lcm, ccm=ccm, path=_backtrack(ccm))


def dtw_distance(a: MultiSeries, b: MultiSeries, band: ConstraintBand | None = None, metric: str = "euclidean") -> float:
    """DTW distance only, via a two-row rolling recursion (O(min memory), any length)."""
    _check_pair(a, b)
    lo, hi = band_bounds(a.n, b.n, band)
    dist = float(_kernels.rolling_distance(a.values, b.values, lo, hi, _metric_id(metric)))
    if not math.isfinite(dist):
        raise InfeasibleBand(f"constraint excludes every path for lengths ({a.n}, {b.n})")
    return dist


def normalized_dtw_distance(
    a: MultiSeries, b: MultiSeries, band: ConstraintBand | None = None, metric: str = "euclidean"
) -> float:
    """DTW distance divided by the optimal warping-path length.

    Path-length normalization makes distances between pairs of differing
    lengths commensurable; it requires the full-matrix mode.
    """
    res = dtw(a, b, band=band, metric=metric)
    return res.distance / res.path_length


def softdtw(a: MultiSeries, b: MultiSeries, gamma: float) -> float:
    """Soft-minimum DTW with squared-Euclidean local costs.

    Converges to dtw(a, b, metric="sqeuclidean") as gamma -> 0; the value
    may be negative for gamma > 0.
    """
    _check_pair(a, b)
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    cost = _kernels.local_cost_matrix(a.values, b.values, _kernels.SQEUCLIDEAN)
    r = _kernels.softdtw_forward(cost, float(gamma))
    return float(r[a.n, b.n])


def softdtw_value_and_gradient(a: MultiSeries, b: MultiSeries, gamma: float):
    """SoftDTW value plus its gradient with respect to a's samples (n x V)."""
    _check_pair(a, b)
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    cost = _kernels.local_cost_matrix(a.values, b.values, _kernels.SQEUCLIDEAN)
    r = _kernels.softdtw_forward(cost, float(gamma))
    e = _kernels.softdtw_backward(cost, r, float(gamma))
    grad = _kernels.sqeuclidean_alignment_gradient(a.values, b.values, e)
    return float(r[a.n, b.n]), grad


def softdtw_gradient(a: MultiSeries, b: MultiSeries, gamma: float) -> np.ndarray:
    """Gradient of softdtw(a, b, gamma) with respect to a's samples."""
    return softdtw_value_and_gradient(a, b, gamma)[1]
