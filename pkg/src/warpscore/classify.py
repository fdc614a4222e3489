"""DTW k-NN and nearest-centroid classification with a cross-validation harness.

Distances default to path-length-normalized DTW so unequal-length queries,
training series and prototypes compare on the same footing. The harness
computes the full pairwise matrix once and reuses it across folds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster import DistanceMatrix, distance_matrix
from .core import Dataset, MultiSeries
from .distance import ConstraintBand, dtw_distance, normalized_dtw_distance
from .errors import DegenerateFold, EmptyTrainingSet, MissingPrototype
from .prototype import Prototype, make_prototype


@dataclass(frozen=True, eq=False)
class ClassifierReport:
    """Cross-validation outcome: accuracy, confusion counts and per-item verdicts."""

    accuracy: float
    labels: tuple[str, ...]
    confusion: np.ndarray  # rows: true label, cols: predicted label
    per_item: tuple[dict, ...]
    scheme: str
    method: str
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "method": self.method,
            "accuracy": self.accuracy,
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "perItem": list(self.per_item),
            **self.meta,
        }


def _series_distance(a: MultiSeries, b: MultiSeries, band, metric, normalized: bool) -> float:
    if normalized:
        return normalized_dtw_distance(a, b, band=band, metric=metric)
    return dtw_distance(a, b, band=band, metric=metric)


def _vote(neighbors: list[tuple[int, float, str]], k: int) -> str:
    """Majority vote over the k nearest; ties go to the nearest tied label."""
    top = neighbors[:k]
    counts: dict[str, int] = {}
    for _, _, lab in top:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    tied = {lab for lab, c in counts.items() if c == best}
    for _, _, lab in top:
        if lab in tied:
            return lab
    raise AssertionError("unreachable: vote over non-empty neighbor list")


def knn_classify(
    query: MultiSeries,
    training: Dataset,
    k: int = 1,
    label_field: str = "skill",
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    normalized: bool = True,
    query_distances=None,
):
    """Label a query by majority vote over its k DTW-nearest training series.

    Returns ``(label, neighbors)`` with neighbors as (index, distance, label)
    sorted ascending by distance (ties by index). ``query_distances`` can
    supply precomputed query-to-training distances.
    """
    if len(training) == 0:
        raise EmptyTrainingSet("knn requires a non-empty training set")
    if not 1 <= k <= len(training):
        raise ValueError(f"k must be in [1, {len(training)}]")
    labels = training.skills() if label_field == "skill" else training.participants()
    if query_distances is None:
        query_distances = [
            _series_distance(query, it.series, band, metric, normalized) for it in training.items
        ]
    order = sorted(range(len(training)), key=lambda t: (query_distances[t], t))
    neighbors = [(t, float(query_distances[t]), labels[t]) for t in order]
    return _vote(neighbors, k), neighbors


def centroid_classify(
    query: MultiSeries,
    prototypes,
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    normalized: bool = True,
) -> str:
    """Label of the DTW-nearest prototype; exactly one evaluation per label."""
    if len(prototypes) < 2:
        raise MissingPrototype(f"need prototypes for >= 2 labels, got {sorted(prototypes)}")
    best_label = None
    best_dist = np.inf
    for label in sorted(prototypes):
        proto = prototypes[label]
        series = proto.series if isinstance(proto, Prototype) else proto
        d = _series_distance(query, series, band, metric, normalized)
        if d < best_dist:
            best_dist = d
            best_label = label
    return best_label


def _make_folds(n: int, scheme: str, folds: int, seed: int) -> list[np.ndarray]:
    if scheme == "loocv":
        return [np.asarray([i]) for i in range(n)]
    if scheme == "kfold":
        if not 2 <= folds <= n:
            raise ValueError(f"folds must be in [2, {n}]")
        order = np.random.default_rng(seed).permutation(n)
        return [np.sort(chunk) for chunk in np.array_split(order, folds)]
    raise ValueError(f"unknown scheme {scheme!r}, expected 'loocv' or 'kfold'")


def cross_validate(
    dataset: Dataset,
    method: str = "knn",
    scheme: str = "loocv",
    k: int = 1,
    proto_method: str = "pam",
    folds: int = 5,
    seed: int = 0,
    label_field: str = "skill",
    band: ConstraintBand | None = None,
    metric: str = "euclidean",
    gamma: float = 1.0,
    matrix: DistanceMatrix | None = None,
    jobs: int = 1,
) -> ClassifierReport:
    """Evaluate knn or nearest-centroid classification under LOOCV or k-fold CV.

    Held-out items never contribute to neighbor sets or prototypes of their
    own fold. The pairwise matrix is computed once and shared across folds;
    per-fold centroid prototypes are rebuilt from training members only.
    """
    n = len(dataset)
    if n < 2:
        raise ValueError("cross-validation needs at least 2 items")
    labels = dataset.skills() if label_field == "skill" else dataset.participants()
    alphabet = tuple(sorted(set(labels)))
    lab_pos = {lab: p for p, lab in enumerate(alphabet)}
    if matrix is None:
        matrix = distance_matrix(dataset, band=band, metric=metric, normalized=True, jobs=jobs)
    norm = matrix.full("normalized")
    raw = matrix.full("raw")
    series = dataset.series()

    predictions: list[str | None] = [None] * n
    for fold in _make_folds(n, scheme, folds, seed):
        held = set(int(i) for i in fold)
        train_idx = [i for i in range(n) if i not in held]
        if not train_idx:
            raise ValueError("a fold left no training items")
        if method == "knn":
            if k > len(train_idx):
                raise ValueError(f"k={k} exceeds training size {len(train_idx)}")
            for q in held:
                order = sorted(train_idx, key=lambda t: (norm[q, t], t))
                neighbors = [(t, float(norm[q, t]), labels[t]) for t in order]
                predictions[q] = _vote(neighbors, k)
        elif method == "centroid":
            by_label: dict[str, list[int]] = {lab: [] for lab in alphabet}
            for i in train_idx:
                by_label[labels[i]].append(i)
            missing = [lab for lab, idx in by_label.items() if not idx]
            if missing:
                raise DegenerateFold(f"fold lacks training items for labels {missing}")
            protos = {}
            for lab, idx in by_label.items():
                protos[lab] = make_prototype(
                    proto_method,
                    [series[i] for i in idx],
                    band=band,
                    metric=metric,
                    gamma=gamma,
                    distances=raw[np.ix_(idx, idx)],
                )
            for q in held:
                predictions[q] = centroid_classify(series[q], protos, band=band, metric=metric)
        else:
            raise ValueError(f"unknown method {method!r}, expected 'knn' or 'centroid'")

    confusion = np.zeros((len(alphabet), len(alphabet)), dtype=np.int64)
    per_item = []
    hits = 0
    for i in range(n):
        true, pred = labels[i], predictions[i]
        confusion[lab_pos[true], lab_pos[pred]] += 1
        hits += true == pred
        per_item.append({"index": i, "true": true, "predicted": pred})
    method_desc = f"knn(k={k})" if method == "knn" else f"centroid({proto_method})"
    scheme_desc = "loocv" if scheme == "loocv" else f"kfold(k={folds}, seed={seed})"
    return ClassifierReport(
        accuracy=hits / n,
        labels=alphabet,
        confusion=confusion,
        per_item=tuple(per_item),
        scheme=scheme_desc,
        method=method_desc,
        meta={"labelField": label_field, "band": band.describe() if band else "none", "metric": metric},
    )
