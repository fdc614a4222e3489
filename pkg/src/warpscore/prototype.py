"""Cluster prototypes: mean, PAM medoid, DBA, SoftDTW barycenter, DTW-MP.

DTW-MP merges two series along their warping path: the prototype has one
element per path step, each the (weighted) mean of the two aligned samples,
so its length k obeys max(m, n) <= k <= m + n. Multi-series prototypes fold
members into the accumulated prototype in ascending order of DTW distance
to the PAM medoid, which makes the result deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MultiSeries, resample, resample_values
from .distance import ConstraintBand, dtw, dtw_distance, softdtw_value_and_gradient
from .errors import EmptyCluster, NonFiniteObjective

PROTOTYPE_METHODS = ("mean", "pam", "dba", "softdtw", "dtwmp-d", "dtwmp-i")


@dataclass(frozen=True, eq=False)
class Prototype:
    """A single series summarizing a cluster, with provenance of how it was built."""

    series: MultiSeries
    method: str
    source_count: int
    params: dict = field(default_factory=dict)


def _require_members(cluster) -> list[MultiSeries]:
    members = list(cluster)
    if not members:
        raise EmptyCluster("prototype requested for an empty cluster")
    return members


def _median_length(members) -> int:
    return int(round(float(np.median([m.n for m in members]))))


def mean_prototype(cluster) -> Prototype:
    """Elementwise per-variable mean; members are resampled to the median length first."""
    members = _require_members(cluster)
    target = _median_length(members)
    if target < 2:
        target = max(m.n for m in members)
    stacked = np.stack([resample(m, target).values if m.n != target else m.values for m in members])
    return Prototype(MultiSeries(stacked.mean(axis=0)), "mean", len(members))


def pairwise_dtw(members, band: ConstraintBand | None = None, metric: str = "euclidean") -> np.ndarray:
    """Symmetric matrix of raw DTW distances between cluster members."""
    k = len(members)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = dtw_distance(members[i], members[j], band=band, metric=metric)
    return out


def pam_medoid_index(distances: np.ndarray) -> int:
    """Index minimizing the summed distance to all other members (ties: lowest index)."""
    sums = np.asarray(distances, dtype=np.float64).sum(axis=1)
    return int(np.argmin(sums))


def pam_prototype(cluster, distances: np.ndarray | None = None, band=None, metric: str = "euclidean") -> Prototype:
    """The medoid: the member with the lowest total DTW distance to the rest."""
    members = _require_members(cluster)
    if distances is None:
        distances = pairwise_dtw(members, band=band, metric=metric)
    idx = pam_medoid_index(distances)
    total = float(np.asarray(distances)[idx].sum())
    return Prototype(members[idx], "pam", len(members), params={"index": idx, "total_distance": total})


def dba_prototype(
    cluster,
    init: MultiSeries | None = None,
    iterations: int = 10,
    band: ConstraintBand | None = None,
    rel_tol: float = 1e-6,
) -> Prototype:
    """DTW barycenter averaging.

    Each round aligns every member to the current prototype and replaces
    each prototype sample with the per-variable mean of all member samples
    aligned to it. Alignment and the tracked objective use squared-Euclidean
    local costs, for which the averaging step provably never increases the
    total within-cluster DTW cost. Stops at ``iterations`` or when the
    objective improves by less than ``rel_tol`` relative.
    """
    members = _require_members(cluster)
    if init is None:
        init = pam_prototype(members, band=band, metric="sqeuclidean").series
    proto = init.values.copy()
    history: list[float] = []
    for _ in range(max(1, iterations)):
        sums = np.zeros_like(proto)
        counts = np.zeros(proto.shape[0])
        cost = 0.0
        for m in members:
            res = dtw(MultiSeries(proto), m, band=band, metric="sqeuclidean")
            cost += res.distance
            pi = res.path[:, 0]
            mj = res.path[:, 1]
            np.add.at(sums, pi, m.values[mj])
            np.add.at(counts, pi, 1.0)
        history.append(cost)
        if len(history) > 1 and history[-2] - history[-1] < rel_tol * max(history[-2], 1e-30):
            break
        proto = sums / counts[:, None]
    return Prototype(
        MultiSeries(proto), "dba", len(members), params={"iterations": len(history), "cost_history": history}
    )


def softdtw_barycenter(
    cluster,
    gamma: float = 1.0,
    init: MultiSeries | None = None,
    max_iters: int = 50,
    step: float = 1e-2,
    grad_tol: float = 0.0,
    max_halvings: int = 20,
) -> Prototype:
    """Gradient descent on the summed SoftDTW cost to all members.

    Uses a fixed step, halved whenever a trial step fails to decrease the
    objective; raises NonFiniteObjective if the objective is still not
    finite after ``max_halvings`` halvings. The returned prototype never has
    a higher objective than the initializer.
    """
    members = _require_members(cluster)
    if init is None:
        init = pam_prototype(members, metric="sqeuclidean").series
    p = init.values.copy()

    def objective_and_grad(values):
        total = 0.0
        grad = np.zeros_like(values)
        series = MultiSeries(values)
        for m in members:
            v, g = softdtw_value_and_gradient(series, m, gamma)
            total += v
            grad += g
        return total, grad

    current, grad = objective_and_grad(p)
    if not np.isfinite(current):
        raise NonFiniteObjective("objective not finite at the initial prototype")
    history = [current]
    for _ in range(max_iters):
        gnorm = float(np.sqrt((grad * grad).sum()))
        if gnorm <= grad_tol:
            break
        eta = step
        improved = False
        value = current
        for _ in range(max_halvings + 1):
            trial = p - eta * grad
            value, tgrad = objective_and_grad(trial)
            if np.isfinite(value) and value <= current:
                p, current, grad = trial, value, tgrad
                improved = True
                break
            eta *= 0.5
        if not improved:
            if not np.isfinite(value):
                raise NonFiniteObjective("objective still diverged after step halving")
            break  # no decrease representable at this precision: converged
        history.append(current)
    return Prototype(
        MultiSeries(p),
        "softdtw",
        len(members),
        params={"gamma": gamma, "iterations": len(history) - 1, "objective_history": history},
    )


def dtwmp_pair(
    a: MultiSeries,
    b: MultiSeries,
    variant: str = "dependent",
    weights=(0.5, 0.5),
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
) -> MultiSeries:
    """Merge two series along their warping path into one prototype series.

    The dependent variant aligns all variables with one shared path; the
    independent variant warps each variable with its own path and resamples
    every merged channel to the longest channel's length to restore a
    rectangular series.
    """
    wa, wb = float(weights[0]), float(weights[1])
    if variant == "dependent":
        path = dtw(a, b, band=band, metric=metric).path
        merged = wa * a.values[path[:, 0]] + wb * b.values[path[:, 1]]
        return MultiSeries(merged)
    if variant != "independent":
        raise ValueError(f"unknown variant {variant!r}, expected 'dependent' or 'independent'")
    channels = []
    for v in range(a.n_vars):
        path = dtw(MultiSeries(a.values[:, v]), MultiSeries(b.values[:, v]), band=band, metric=metric).path
        channels.append(wa * a.values[path[:, 0], v] + wb * b.values[path[:, 1], v])
    longest = max(len(c) for c in channels)
    merged = np.column_stack([c if len(c) == longest else resample_values(c, longest) for c in channels])
    return MultiSeries(merged)


def dtwmp_multi(
    cluster,
    variant: str = "dependent",
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    distances: np.ndarray | None = None,
) -> Prototype:
    """Iterated pairwise merge over a cluster, anchored at the PAM medoid.

    Members are merged into the accumulated prototype in ascending order of
    DTW distance to the medoid (ties by index), so the construction is
    deterministic for a given member order.
    """
    members = _require_members(cluster)
    method = "dtwmp-d" if variant == "dependent" else "dtwmp-i"
    if len(members) == 1:
        return Prototype(members[0], method, 1)
    if distances is None:
        distances = pairwise_dtw(members, band=band, metric=metric)
    medoid = pam_medoid_index(distances)
    order = sorted(range(len(members)), key=lambda i: (distances[medoid, i], i))
    proto = members[order[0]]
    for idx in order[1:]:
        proto = dtwmp_pair(proto, members[idx], variant=variant, band=band, metric=metric)
    return Prototype(proto, method, len(members), params={"merge_order": order})


def make_prototype(method: str, cluster, band=None, metric: str = "euclidean", gamma: float = 1.0, **kwargs) -> Prototype:
    """Dispatch a prototype build by method name (see PROTOTYPE_METHODS)."""
    if method == "mean":
        return mean_prototype(cluster)
    if method == "pam":
        return pam_prototype(cluster, band=band, metric=metric, distances=kwargs.get("distances"))
    if method == "dba":
        return dba_prototype(cluster, band=band, iterations=kwargs.get("iterations", 10), init=kwargs.get("init"))
    if method == "softdtw":
        return softdtw_barycenter(
            cluster, gamma=gamma, init=kwargs.get("init"), max_iters=kwargs.get("max_iters", 50)
        )
    if method in ("dtwmp-d", "dtwmp-i"):
        variant = "dependent" if method == "dtwmp-d" else "independent"
        return dtwmp_multi(cluster, variant=variant, band=band, metric=metric, distances=kwargs.get("distances"))
    raise ValueError(f"unknown prototype method {method!r}, expected one of {PROTOTYPE_METHODS}")
