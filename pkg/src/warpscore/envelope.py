"""Per-variable envelopes and the summative "tunnel of acceptable motion".

A Keogh envelope brackets one series with sliding-window max/min bounds per
variable. A summative envelope combines several envelopes elementwise
(max of uppers, min of lowers) so that anything inside any contributor stays
inside the combination. The outside-distance score accumulates, per step,
the Euclidean magnitude of the exceedance above the upper or below the
lower bound across variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .core import MultiSeries, resample
from .distance import ConstraintBand, dtw_distance
from .errors import DimensionMismatch, EmptySet, LengthMismatch, ValidationError


@dataclass(frozen=True, eq=False)
class Envelope:
    """Upper/lower bound sequences (n x V each) around a series or cluster."""

    upper: np.ndarray
    lower: np.ndarray
    window: int
    source_count: int = 1

    def __post_init__(self):
        up = np.asarray(self.upper, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        if up.ndim == 1:
            up = up[:, None]
        if lo.ndim == 1:
            lo = lo[:, None]
        if up.shape != lo.shape:
            raise ValidationError(f"upper and lower shapes differ: {up.shape} vs {lo.shape}")
        if np.any(lo > up + 1e-12):
            raise ValidationError("lower bound exceeds upper bound")
        if self.window < 0:
            raise ValidationError("window radius must be >= 0")
        up = up.copy()
        lo = lo.copy()
        up.setflags(write=False)
        lo.setflags(write=False)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)

    @property
    def n(self) -> int:
        return self.upper.shape[0]

    @property
    def n_vars(self) -> int:
        return self.upper.shape[1]

    def contains(self, series: MultiSeries) -> bool:
        v = series.values
        return bool(np.all(v <= self.upper) and np.all(v >= self.lower))


def keogh_envelope(series: MultiSeries, r: int) -> Envelope:
    """Sliding-window max/min bounds with radius ``r``, computed per variable.

    Windows are clipped at the series boundaries; ``r = 0`` gives
    upper = lower = the series itself.
    """
    if not 0 <= r < series.n:
        raise ValueError(f"window radius must satisfy 0 <= r < n, got r={r}, n={series.n}")
    size = 2 * r + 1
    upper = maximum_filter1d(series.values, size=size, axis=0, mode="nearest")
    lower = minimum_filter1d(series.values, size=size, axis=0, mode="nearest")
    return Envelope(upper=upper, lower=lower, window=r, source_count=1)


def _check_series_envelope(series: MultiSeries, env: Envelope):
    if series.n_vars != env.n_vars:
        raise DimensionMismatch(f"series has {series.n_vars} variables, envelope {env.n_vars}")
    if series.n != env.n:
        raise LengthMismatch(f"series length {series.n} != envelope length {env.n}")


def lb_keogh(envelope: Envelope, candidate: MultiSeries) -> float:
    """Lower bound on banded DTW: sqrt of the summed squared exceedance.

    Returns 0 exactly when the candidate lies inside the envelope. For an
    envelope of radius r around q, the value never exceeds the DTW distance
    (Euclidean local costs) between q and the candidate under a Sakoe-Chiba
    band of the same radius.
    """
    _check_series_envelope(candidate, envelope)
    v = candidate.values
    above = np.maximum(v - envelope.upper, 0.0)
    below = np.maximum(envelope.lower - v, 0.0)
    return float(np.sqrt((above * above + below * below).sum()))


def summative_envelope(envelopes) -> Envelope:
    """Elementwise max of uppers and min of lowers across several envelopes."""
    envs = list(envelopes)
    if not envs:
        raise EmptySet("summative envelope needs at least one contributing envelope")
    n, nv = envs[0].n, envs[0].n_vars
    for e in envs[1:]:
        if e.n != n:
            raise LengthMismatch(f"envelope lengths differ: {e.n} vs {n}")
        if e.n_vars != nv:
            raise DimensionMismatch(f"envelope variable counts differ: {e.n_vars} vs {nv}")
    upper = np.maximum.reduce([e.upper for e in envs])
    lower = np.minimum.reduce([e.lower for e in envs])
    return Envelope(
        upper=upper,
        lower=lower,
        window=max(e.window for e in envs),
        source_count=sum(e.source_count for e in envs),
    )


def outside_distance(series: MultiSeries, envelope: Envelope):
    """Total out-of-envelope distance plus the per-step exceedance trace.

    Each step contributes the Euclidean magnitude, across variables, of
    max(value - upper, lower - value, 0); steps inside the tunnel contribute
    nothing.
    """
    _check_series_envelope(series, envelope)
    v = series.values
    exceed = np.maximum(np.maximum(v - envelope.upper, envelope.lower - v), 0.0)
    trace = np.sqrt((exceed * exceed).sum(axis=1))
    return float(trace.sum()), trace


def resample_envelope(envelope: Envelope, target_length: int) -> Envelope:
    """Linearly resample both bounds to ``target_length`` steps."""
    if target_length == envelope.n:
        return envelope
    upper = resample(MultiSeries(envelope.upper), target_length).values
    lower = resample(MultiSeries(envelope.lower), target_length).values
    # interpolation between crossing-free bounds cannot cross, but guard fp drift
    return Envelope(
        upper=np.maximum(upper, lower), lower=lower, window=envelope.window, source_count=envelope.source_count
    )


def envelope_prefix(envelope: Envelope, fraction: float, target_length: int | None = None) -> Envelope:
    """The leading ``fraction`` of an envelope, optionally resampled."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    k = max(2, int(round(fraction * envelope.n)))
    prefix = Envelope(
        upper=envelope.upper[:k], lower=envelope.lower[:k], window=envelope.window, source_count=envelope.source_count
    )
    if target_length is not None:
        prefix = resample_envelope(prefix, target_length)
    return prefix


def default_window(n: int, pct: float = 0.05) -> int:
    """Conventional window radius: ``pct`` of the series length, at least 1."""
    if pct <= 0:
        return 0
    return max(1, min(n - 1, int(round(pct * n))))


@dataclass(frozen=True, eq=False)
class Tunnel:
    """A summative envelope plus the series that shaped it (prototype first)."""

    envelope: Envelope
    contributors: tuple  # resampled MultiSeries, contributors[0] is the prototype
    member_indices: tuple  # positions of the chosen members in the input order


def summative_tunnel(
    prototype: MultiSeries,
    members,
    window: int | None = None,
    n_best: int = 4,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
) -> Tunnel:
    """Build the acceptable-motion tunnel around a cluster prototype.

    The contributing set is the prototype itself plus its ``n_best``
    DTW-nearest members, each resampled to the prototype length and
    enveloped with the given window radius before the summative combination.
    Every contributor scores 0 against the resulting envelope.
    """
    members = list(members)
    if window is None:
        window = default_window(prototype.n)
    ranked = sorted(
        range(len(members)),
        key=lambda i: (dtw_distance(prototype, members[i], band=band, metric=metric), i),
    )
    chosen = tuple(ranked[:n_best])
    contributors = (prototype,) + tuple(resample(members[i], prototype.n) for i in chosen)
    env = summative_envelope([keogh_envelope(s, window) for s in contributors])
    return Tunnel(envelope=env, contributors=contributors, member_indices=chosen)
