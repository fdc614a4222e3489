"""Real-time assessment of an in-progress recording.

A session buffers samples as they arrive; every ``cadence`` samples it
re-estimates the completion phase against the assigned cluster prototype,
rescoring the whole buffer against the matching envelope prefix and raising
alarms for debounced out-of-tunnel runs. Phase estimation compares the
buffer with prototype prefixes at 10% .. 100%, using path-length-normalized
DTW so a fast or slow execution still matches its true proportion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MultiSeries, resample
from .distance import ConstraintBand, dtw_distance, normalized_dtw_distance
from .envelope import Envelope, envelope_prefix, outside_distance, resample_envelope, summative_tunnel
from .errors import DimensionMismatch, InvalidWeight, NonFiniteSample, TooShort
from .prototype import Prototype, dtwmp_pair, make_prototype

DECILES = tuple(range(10, 101, 10))


def _series_of(proto) -> MultiSeries:
    return proto.series if isinstance(proto, Prototype) else proto


def _prefix_distance(query: MultiSeries, prototype: MultiSeries, length: int, band, metric, max_len: int) -> float:
    prefix = MultiSeries(prototype.values[:length])
    if prefix.n > max_len:
        prefix = resample(prefix, max_len)
    return normalized_dtw_distance(query, prefix, band=band, metric=metric)


def phase_estimate(
    partial: MultiSeries,
    prototype: MultiSeries,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    max_len: int = 500,
):
    """Estimate which decile of the prototype a partial series corresponds to.

    Compares the partial series against ten prototype prefixes (10% .. 100%)
    and returns ``(decile, normalized_distance)`` for the best match. Both
    sides are downsampled to at most ``max_len`` samples to bound the DTW
    cost of a tick.
    """
    prototype = _series_of(prototype)
    if partial.n < 2:
        raise TooShort(f"partial series has {partial.n} samples; need >= 2")
    if prototype.n < 10:
        raise TooShort(f"prototype has {prototype.n} samples; need >= 10")
    query = partial if partial.n <= max_len else resample(partial, max_len)
    best = (None, np.inf)
    for decile in DECILES:
        k = max(2, int(round(decile / 100 * prototype.n)))
        nd = _prefix_distance(query, prototype, k, band, metric, max_len)
        if nd < best[1]:
            best = (decile, nd)
    return best


def match_proportion(
    partial: MultiSeries,
    prototype: MultiSeries,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    max_len: int = 500,
):
    """Decile estimate plus a refined matched proportion for envelope alignment.

    Decile granularity alone can misalign the envelope prefix by up to 5% of
    the prototype, which is exactly the default envelope window; refining the
    prefix length around the winning decile keeps the residual misalignment
    well inside the window margin.
    """
    prototype = _series_of(prototype)
    decile, _ = phase_estimate(partial, prototype, band=band, metric=metric, max_len=max_len)
    query = partial if partial.n <= max_len else resample(partial, max_len)
    k = prototype.n
    candidates = sorted(
        {
            max(2, min(k, int(round((decile / 100 + delta) * k))))
            for delta in (-0.05, -0.025, 0.0, 0.025, 0.05)
        }
    )
    best_len, best_nd = None, np.inf
    for length in candidates:
        nd = _prefix_distance(query, prototype, length, band, metric, max_len)
        if nd < best_nd:
            best_len, best_nd = length, nd
    return decile, best_len / k, best_nd


def dynamic_score(partial: MultiSeries, prototype, envelope: Envelope, decile: int):
    """Score a partial series against the decile-matched envelope prefix.

    Returns ``(score, proportion_outside)``: the out-of-tunnel distance of
    the buffer versus the envelope prefix resampled to the buffer length,
    and the fraction of steps with nonzero exceedance.
    """
    if decile not in DECILES:
        raise ValueError(f"decile must be one of {DECILES}, got {decile}")
    prototype = _series_of(prototype)
    if prototype.n != envelope.n:
        raise ValueError(f"envelope length {envelope.n} does not match prototype length {prototype.n}")
    prefix = envelope_prefix(envelope, decile / 100.0, target_length=partial.n)
    score, trace = outside_distance(partial, prefix)
    return score, float((trace > 0).mean())


def batch_score(series: MultiSeries, envelope: Envelope):
    """Out-of-tunnel total and per-step trace for a complete recording.

    The envelope is resampled to the series length; this is also exactly how
    a finished session computes its final score.
    """
    return outside_distance(series, resample_envelope(envelope, series.n))


@dataclass(frozen=True)
class AlarmEvent:
    """A debounced out-of-tunnel run: where it was confirmed and how far outside."""

    index: int  # sample index at which the run reached the debounce length
    onset: int  # first sample of the run
    detected_at: int  # buffer length at the tick that raised the alarm
    magnitude: float


@dataclass
class SessionState:
    """Mutable per-session buffer and assessment state (single writer).

    ``pace`` is buffer length divided by the phase-matched prototype prefix
    length: above 1 the execution is running slow, below 1 fast.
    """

    n_vars: int
    cadence: int = 25
    alarm_threshold: float = 0.0
    debounce: int = 3
    cluster: int | None = None
    max_phase_len: int = 500
    samples: list = field(default_factory=list)
    phase: int | None = None
    pace: float | None = None
    score: float = 0.0
    proportion_outside: float = 0.0
    alarms: list = field(default_factory=list)
    events: list = field(default_factory=list)
    _scanned_through: int = 0

    @property
    def buffer(self) -> MultiSeries:
        return MultiSeries(np.asarray(self.samples))

    def __len__(self) -> int:
        return len(self.samples)


def assign_cluster(buffer: MultiSeries, prototypes, band=None, metric: str = "euclidean", max_len: int = 500) -> int:
    """The cluster whose prototype best matches the buffer (lowest phase distance)."""
    best = (None, np.inf)
    for cid in sorted(prototypes):
        _, nd = phase_estimate(buffer, _series_of(prototypes[cid]), band=band, metric=metric, max_len=max_len)
        if nd < best[1]:
            best = (cid, nd)
    return best[0]


def _scan_alarms(state: SessionState, trace: np.ndarray):
    """Alarm on exceedance runs of at least ``debounce`` steps.

    A run alarms whenever it reaches into samples not scanned before, so an
    excursion that keeps extending is re-reported tick after tick until the
    trajectory returns inside the tunnel. ``index`` marks the sample that
    completed the run's debounce.
    """
    outside = trace > state.alarm_threshold
    raised = False
    n = len(trace)
    i = 0
    while i < n:
        if not outside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and outside[j + 1]:
            j += 1
        if j - i + 1 >= state.debounce and j >= state._scanned_through:
            state.alarms.append(
                AlarmEvent(
                    index=i + state.debounce - 1,
                    onset=i,
                    detected_at=n,
                    magnitude=float(trace[i : j + 1].max()),
                )
            )
            raised = True
        i = j + 1
    state._scanned_through = n
    return raised


def _tick(state: SessionState, prototypes, envelopes, band, metric, final: bool):
    buffer = state.buffer
    if state.cluster is None:
        state.cluster = assign_cluster(buffer, prototypes, band, metric, state.max_phase_len)
    proto = _series_of(prototypes[state.cluster])
    if final:
        state.phase = 100
        env_prefix = resample_envelope(envelopes[state.cluster], buffer.n)
    else:
        state.phase, fraction, _ = match_proportion(
            buffer, proto, band=band, metric=metric, max_len=state.max_phase_len
        )
        env_prefix = envelope_prefix(envelopes[state.cluster], fraction, target_length=buffer.n)
    state.pace = buffer.n / (state.phase / 100.0 * proto.n)
    score, trace = outside_distance(buffer, env_prefix)
    state.score = score
    state.proportion_outside = float((trace > 0).mean())
    raised = _scan_alarms(state, trace)
    event = {
        "index": len(state.samples),
        "phase": state.phase,
        "pace": state.pace,
        "score": state.score,
    }
    if raised:
        event["alarm"] = True
    if final:
        event["final"] = True
    state.events.append(event)


def ingest(
    state: SessionState,
    sample,
    prototypes,
    envelopes,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
) -> SessionState:
    """Append one sample; every ``cadence`` samples, re-estimate phase and rescore."""
    arr = np.asarray(sample, dtype=np.float64).reshape(-1)
    if arr.shape[0] != state.n_vars:
        raise DimensionMismatch(f"sample has {arr.shape[0]} variables, session expects {state.n_vars}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSample(f"sample at index {len(state.samples)} is not finite")
    state.samples.append(arr)
    if len(state.samples) >= 2 and len(state.samples) % state.cadence == 0:
        _tick(state, prototypes, envelopes, band, metric, final=False)
    return state


def finish(
    state: SessionState,
    prototypes,
    envelopes,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
) -> SessionState:
    """Close a session: score the complete buffer against the full envelope.

    The final score equals ``batch_score`` of the buffered recording against
    the session's envelope.
    """
    if len(state.samples) < 2:
        raise TooShort("cannot finish a session with fewer than 2 samples")
    _tick(state, prototypes, envelopes, band, metric, final=True)
    return state


def replay(
    series: MultiSeries,
    prototypes,
    envelopes,
    cadence: int = 25,
    alarm_threshold: float = 0.0,
    cluster: int | None = None,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
) -> SessionState:
    """Stream a complete recording through a fresh session and finish it."""
    state = SessionState(
        n_vars=series.n_vars, cadence=cadence, alarm_threshold=alarm_threshold, cluster=cluster
    )
    for row in series.values:
        ingest(state, row, prototypes, envelopes, band=band, metric=metric)
    return finish(state, prototypes, envelopes, band=band, metric=metric)


@dataclass(frozen=True, eq=False)
class AdaptResult:
    """Outcome of folding a new series into a cluster."""

    prototype: Prototype
    envelope: Envelope | None
    contributors: list | None
    new_rank: int


def adapt_prototype(
    members,
    prototype: Prototype,
    new_series: MultiSeries,
    mode: str = "recompute",
    w: float = 0.5,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    gamma: float = 1.0,
    window: int | None = None,
    n_best: int = 4,
) -> AdaptResult:
    """Update a cluster prototype with a newly completed series.

    ``recompute`` reruns the prototype's own method over members plus the
    new series; ``weighted`` path-merges the new series into the existing
    prototype with weights (1 - w, w). When the new series ranks among the
    ``n_best`` DTW-nearest to the updated prototype, the cluster envelope is
    regenerated and returned alongside.
    """
    members = list(members)
    if mode == "recompute":
        new_proto = make_prototype(prototype.method, members + [new_series], band=band, metric=metric, gamma=gamma)
    elif mode == "weighted":
        if not 0.0 < w < 1.0:
            raise InvalidWeight(f"weight must be in (0, 1), got {w}")
        merged = dtwmp_pair(prototype.series, new_series, weights=(1.0 - w, w), band=band, metric=metric)
        new_proto = Prototype(
            merged, prototype.method, prototype.source_count + 1, params={"weighted": True, "w": w}
        )
    else:
        raise ValueError(f"unknown mode {mode!r}, expected 'recompute' or 'weighted'")

    pool = members + [new_series]
    dists = [dtw_distance(new_proto.series, s, band=band, metric=metric) for s in pool]
    order = sorted(range(len(pool)), key=lambda i: (dists[i], i))
    new_rank = order.index(len(pool) - 1)
    envelope = None
    contributors = None
    if new_rank < n_best:
        tunnel = summative_tunnel(
            new_proto.series, pool, window=window, n_best=n_best, band=band, metric=metric
        )
        envelope = tunnel.envelope
        contributors = list(tunnel.contributors)
    return AdaptResult(prototype=new_proto, envelope=envelope, contributors=contributors, new_rank=new_rank)
