"""Pairwise distance matrices, hierarchical and k-medoids clustering, validity indices.

Distances between recordings default to DTW normalized by the warping-path
length, which keeps unequal-length comparisons commensurable; the raw DTW
distance is kept alongside.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .distance import ConstraintBand, dtw, dtw_distance
from .errors import SingletonOnly, WarpscoreError


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Condensed symmetric pairwise distances with zero diagonal.

    ``raw`` holds DTW distances in scipy condensed order ((0,1), (0,2), ...);
    ``path_lengths`` holds the matching optimal-path lengths when the matrix
    was built in normalized mode.
    """

    size: int
    raw: np.ndarray
    path_lengths: np.ndarray | None = None

    def __post_init__(self):
        expected = self.size * (self.size - 1) // 2
        if self.raw.shape != (expected,):
            raise ValueError(f"expected {expected} condensed entries, got {self.raw.shape}")

    @staticmethod
    def condensed_index(i: int, j: int, n: int) -> int:
        if i > j:
            i, j = j, i
        return n * i - (i * (i + 1)) // 2 + (j - i - 1)

    def get(self, i: int, j: int, kind: str = "normalized") -> float:
        if i == j:
            return 0.0
        pos = self.condensed_index(i, j, self.size)
        if kind == "raw":
            return float(self.raw[pos])
        if kind == "normalized":
            if self.path_lengths is None:
                raise ValueError("matrix was built without path lengths; only kind='raw' is available")
            return float(self.raw[pos] / self.path_lengths[pos])
        raise ValueError(f"unknown kind {kind!r}")

    def full(self, kind: str = "normalized") -> np.ndarray:
        if kind == "raw":
            cond = self.raw
        elif kind == "normalized":
            if self.path_lengths is None:
                raise ValueError("matrix was built without path lengths; only kind='raw' is available")
            cond = self.raw / self.path_lengths
        else:
            raise ValueError(f"unknown kind {kind!r}")
        out = np.zeros((self.size, self.size))
        iu = np.triu_indices(self.size, k=1)
        out[iu] = cond
        out[(iu[1], iu[0])] = cond
        return out


def _pair_list(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def distance_matrix(
    dataset: Dataset,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    normalized: bool = True,
    jobs: int = 1,
) -> DistanceMatrix:
    """All-pairs DTW over a dataset: (N^2 - N)/2 evaluations.

    With ``normalized=True`` the optimal path is extracted per pair so
    entries can be reported as distance / path length. Pair evaluation is
    data-parallel over ``jobs`` threads; the result does not depend on the
    thread count.
    """
    if len(dataset) < 2:
        raise ValueError("distance matrix needs at least 2 items")
    series = dataset.series()
    pairs = _pair_list(len(dataset))
    raw = np.zeros(len(pairs))
    lengths = np.zeros(len(pairs)) if normalized else None

    def evaluate(pos):
        i, j = pairs[pos]
        try:
            if normalized:
                res = dtw(series[i], series[j], band=band, metric=metric)
                raw[pos] = res.distance
                lengths[pos] = res.path_length
            else:
                raw[pos] = dtw_distance(series[i], series[j], band=band, metric=metric)
        except WarpscoreError as exc:
            raise type(exc)(f"pair ({i}, {j}): {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(evaluate, range(len(pairs))))
    else:
        for pos in range(len(pairs)):
            evaluate(pos)
    return DistanceMatrix(size=len(dataset), raw=raw, path_lengths=lengths)


@dataclass(frozen=True, eq=False)
class Clustering:
    """Item-to-cluster assignment with the merge tree (hierarchical) or medoids (partitional)."""

    assignment: np.ndarray  # (N,) int, cluster ids 1..C
    method: str
    dendrogram: tuple | None = None  # ((left, right, height), ...) scipy-style ids
    medoids: tuple | None = None
    cost_history: tuple | None = None

    @property
    def n_clusters(self) -> int:
        return int(self.assignment.max())

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster_id)


def _canonical_ids(raw_labels: np.ndarray) -> np.ndarray:
    """Renumber cluster labels 1..C in order of each cluster's first item."""
    out = np.zeros_like(raw_labels)
    next_id = 0
    seen: dict[int, int] = {}
    for pos, lab in enumerate(raw_labels):
        if lab not in seen:
            next_id += 1
            seen[lab] = next_id
        out[pos] = seen[lab]
    return out


def hierarchical_cluster(matrix: DistanceMatrix, linkage: str = "average", target_clusters: int = 1) -> Clustering:
    """Agglomerative clustering from a precomputed matrix.

    Lance-Williams updates for single/complete/average linkage; at every
    step the globally closest pair of clusters is merged, ties broken by the
    smallest pair of slot indices (each cluster is tracked at the slot of
    its lowest-index member). Cutting the merge sequence after N - C merges
    yields the assignment.
    """
    n = matrix.size
    if not 1 <= target_clusters <= n:
        raise ValueError(f"target_clusters must be in [1, {n}]")
    if linkage not in ("single", "complete", "average"):
        raise ValueError(f"unknown linkage {linkage!r}")

    dist = matrix.full("normalized" if matrix.path_lengths is not None else "raw").copy()
    np.fill_diagonal(dist, np.inf)
    alive = np.ones(n, dtype=bool)
    cluster_id = list(range(n))  # slot -> current cluster id
    sizes = np.ones(n)
    merges = []

    for step in range(n - 1):
        # globally closest pair of live slots; np.argmin scans row-major, so
        # ties resolve to the smallest (i, j) slot pair automatically
        flat = int(np.argmin(dist))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        merges.append((cluster_id[i], cluster_id[j], float(dist[i, j])))
        others = alive.copy()
        others[[i, j]] = False
        if linkage == "single":
            merged = np.minimum(dist[i], dist[j])
        elif linkage == "complete":
            merged = np.maximum(dist[i], dist[j])
        else:
            merged = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i, others] = merged[others]
        dist[others, i] = merged[others]
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        alive[j] = False
        sizes[i] += sizes[j]
        cluster_id[i] = n + step

    # replay the first N - C merges to obtain the cut assignment
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, (left, right, _) in enumerate(merges[: n - target_clusters]):
        new = n + t
        parent[find(left)] = new
        parent[find(right)] = new
    roots = np.asarray([find(i) for i in range(n)])
    return Clustering(
        assignment=_canonical_ids(roots),
        method=f"hierarchical({linkage})",
        dendrogram=tuple(merges),
    )


def partitional_cluster(matrix: DistanceMatrix, k: int, seed: int = 0, max_iters: int = 100) -> Clustering:
    """k-medoids over the precomputed matrix, alternating assignment and medoid update.

    The total within-cluster cost never increases between iterations; the
    recorded cost history makes that checkable.
    """
    n = matrix.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    dist = matrix.full("normalized" if matrix.path_lengths is not None else "raw")
    rng = np.random.default_rng(seed)
    medoids = np.sort(rng.choice(n, size=k, replace=False))

    def assign(meds):
        return np.argmin(dist[:, meds], axis=1)  # ties -> lowest medoid position

    labels = assign(medoids)
    history = [float(dist[np.arange(n), medoids[labels]].sum())]
    for _ in range(max_iters):
        new_medoids = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(labels == c)
            if members.size == 0:
                continue
            within = dist[np.ix_(members, members)].sum(axis=0)
            new_medoids[c] = members[int(np.argmin(within))]
        new_labels = assign(new_medoids)
        cost = float(dist[np.arange(n), new_medoids[new_labels]].sum())
        history.append(cost)
        if np.array_equal(new_medoids, medoids) and np.array_equal(new_labels, labels):
            break
        medoids, labels = new_medoids, new_labels
    return Clustering(
        assignment=_canonical_ids(labels),
        method="partitional(k-medoids)",
        medoids=tuple(int(m) for m in medoids),
        cost_history=tuple(history),
    )


CVI_ORIENTATION = {
    "silhouette": "max",
    "dunn": "max",
    "davies_bouldin": "min",
    "davies_bouldin_star": "min",
    "calinski_harabasz": "max",
}


def cvi_suite(matrix: DistanceMatrix, clustering: Clustering) -> dict[str, float]:
    """Cluster validity indices computed purely from the distance matrix.

    Centroid-based indices (Davies-Bouldin, DB*, Calinski-Harabasz) use the
    per-cluster medoid in place of a centroid. Orientation per index is in
    CVI_ORIENTATION.
    """
    labels = clustering.assignment
    ids = np.unique(labels)
    if ids.size < 2:
        raise ValueError("validity indices need at least 2 clusters")
    dist = matrix.full("normalized" if matrix.path_lengths is not None else "raw")
    n = matrix.size
    clusters = [np.flatnonzero(labels == c) for c in ids]
    if all(len(c) == 1 for c in clusters):
        raise SingletonOnly("every cluster is a singleton; silhouette is undefined")

    # silhouette (members of singleton clusters contribute 0 by convention)
    cluster_of = {int(c): members for c, members in zip(ids, clusters)}
    sil = np.zeros(n)
    for i in range(n):
        own = cluster_of[int(labels[i])]
        if own.size == 1:
            continue
        a = dist[i, own[own != i]].mean()
        b = min(dist[i, other].mean() for other, c in zip(clusters, ids) if c != labels[i])
        sil[i] = (b - a) / max(a, b)
    silhouette = float(sil.mean())

    # dunn
    min_inter = min(
        dist[np.ix_(clusters[p], clusters[q])].min()
        for p in range(len(clusters))
        for q in range(p + 1, len(clusters))
    )
    diameters = [dist[np.ix_(c, c)].max() if len(c) > 1 else 0.0 for c in clusters]
    max_diam = max(diameters)
    dunn = float(min_inter / max_diam) if max_diam > 0 else float("inf")

    # medoid-as-centroid statistics
    medoids = []
    spreads = []
    for c in clusters:
        within = dist[np.ix_(c, c)].sum(axis=0)
        med = c[int(np.argmin(within))]
        medoids.append(med)
        spreads.append(float(dist[c, med].mean()))
    medoids = np.asarray(medoids)
    kclusters = len(clusters)

    pair_sep = dist[np.ix_(medoids, medoids)].astype(np.float64)
    np.fill_diagonal(pair_sep, np.inf)
    db_terms = []
    db_star_terms = []
    for p in range(kclusters):
        ratios = [
            (spreads[p] + spreads[q]) / pair_sep[p, q] if pair_sep[p, q] > 0 else float("inf")
            for q in range(kclusters)
            if q != p
        ]
        db_terms.append(max(ratios))
        numer = max(spreads[p] + spreads[q] for q in range(kclusters) if q != p)
        denom = pair_sep[p].min()
        db_star_terms.append(numer / denom if denom > 0 else float("inf"))
    davies_bouldin = float(np.mean(db_terms))
    davies_bouldin_star = float(np.mean(db_star_terms))

    # calinski-harabasz with squared distances to medoids
    global_within = dist.sum(axis=0)
    global_medoid = int(np.argmin(global_within))
    between = sum(len(c) * dist[m, global_medoid] ** 2 for c, m in zip(clusters, medoids))
    within = sum(float((dist[c, m] ** 2).sum()) for c, m in zip(clusters, medoids))
    if within > 0 and n > kclusters:
        calinski = float((between / (kclusters - 1)) / (within / (n - kclusters)))
    else:
        calinski = float("inf")

    return {
        "silhouette": silhouette,
        "dunn": dunn,
        "davies_bouldin": davies_bouldin,
        "davies_bouldin_star": davies_bouldin_star,
        "calinski_harabasz": calinski,
    }


def composition_report(clustering: Clustering, dataset: Dataset) -> dict[int, dict]:
    """Per-cluster makeup: proportion of items by participant and by skill."""
    out: dict[int, dict] = {}
    for c in np.unique(clustering.assignment):
        idx = clustering.members(int(c))
        total = idx.size
        by_participant: dict[str, float] = {}
        by_skill: dict[str, float] = {}
        for i in idx:
            it = dataset.items[int(i)]
            by_participant[it.participant] = by_participant.get(it.participant, 0.0) + 1.0
            by_skill[it.skill] = by_skill.get(it.skill, 0.0) + 1.0
        out[int(c)] = {
            "size": int(total),
            "by_participant": {p: v / total for p, v in sorted(by_participant.items())},
            "by_skill": {s: v / total for s, v in sorted(by_skill.items())},
        }
    return out
