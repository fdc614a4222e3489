import numpy as np
import pytest

import warpscore.cluster as cluster_mod
from warpscore.cluster import (
    CVI_ORIENTATION,
    Clustering,
    DistanceMatrix,
    composition_report,
    cvi_suite,
    distance_matrix,
    hierarchical_cluster,
    partitional_cluster,
)
from warpscore.core import Dataset, LabeledSeries
from warpscore.distance import dtw
from warpscore.errors import SingletonOnly

import oracles
from conftest import make_series


def _dataset_from_values(values_list):
    items = tuple(
        LabeledSeries(make_series(v), "N", f"p{k}") for k, v in enumerate(values_list)
    )
    return Dataset(items, name="points")


def _matrix_from_full(full):
    full = np.asarray(full, dtype=float)
    iu = np.triu_indices(full.shape[0], k=1)
    return DistanceMatrix(size=full.shape[0], raw=full[iu], path_lengths=None)


class TestDistanceMatrix:
    def test_duplicate_items_give_zero_entry(self):
        ds = _dataset_from_values([[0.0, 1.0], [0.0, 1.0], [5.0, 6.0]])
        m = distance_matrix(ds)
        assert m.get(0, 1) == 0.0
        assert m.get(0, 2) > 0.0

    def test_evaluation_count_is_condensed(self, monkeypatch):
        ds = _dataset_from_values([[0.0], [1.0], [2.0]])
        calls = []
        real = cluster_mod.dtw

        def counting(*args, **kwargs):
            calls.append(1)
            return real(*args, **kwargs)

        monkeypatch.setattr(cluster_mod, "dtw", counting)
        distance_matrix(ds)
        assert len(calls) == 3

    def test_symmetric_and_recompute_spot_check(self, rng):
        series = [oracles.rand_multiseries(rng, int(rng.integers(4, 9)), 2) for _ in range(6)]
        ds = _dataset_from_values(series)
        m = distance_matrix(ds)
        full = m.full("normalized")
        assert np.array_equal(full, full.T)
        assert np.all(np.diag(full) == 0.0)
        for _ in range(5):
            i, j = rng.integers(0, 6, size=2)
            if i == j:
                continue
            res = dtw(ds.items[int(i)].series, ds.items[int(j)].series)
            assert full[i, j] == res.distance / res.path_length

    def test_jobs_do_not_change_result(self, rng):
        ds = _dataset_from_values([oracles.rand_multiseries(rng, 7, 2) for _ in range(7)])
        a = distance_matrix(ds, jobs=1)
        b = distance_matrix(ds, jobs=4)
        assert np.array_equal(a.raw, b.raw)
        assert np.array_equal(a.path_lengths, b.path_lengths)

    def test_raw_mode_without_paths(self, rng):
        ds = _dataset_from_values([oracles.rand_multiseries(rng, 6) for _ in range(3)])
        m = distance_matrix(ds, normalized=False)
        with pytest.raises(ValueError):
            m.full("normalized")
        assert m.full("raw").shape == (3, 3)

    def test_needs_two_items(self):
        ds = _dataset_from_values([[0.0]])
        with pytest.raises(ValueError):
            distance_matrix(ds)


class TestHierarchical:
    def test_two_tight_pairs(self):
        ds = _dataset_from_values([[0.0], [0.1], [10.0], [10.1]])
        m = distance_matrix(ds)
        clustering = hierarchical_cluster(m, linkage="average", target_clusters=2)
        assert clustering.assignment.tolist() == [1, 1, 2, 2]

    def test_extreme_cuts(self):
        ds = _dataset_from_values([[0.0], [1.0], [2.0], [3.0]])
        m = distance_matrix(ds)
        every = hierarchical_cluster(m, target_clusters=4)
        assert sorted(every.assignment.tolist()) == [1, 2, 3, 4]
        one = hierarchical_cluster(m, target_clusters=1)
        assert set(one.assignment.tolist()) == {1}

    def test_dendrogram_has_n_minus_1_merges_and_monotone_heights(self, rng):
        for linkage in ("average", "complete", "single"):
            full = rng.uniform(1.0, 9.0, size=(8, 8))
            full = (full + full.T) / 2
            np.fill_diagonal(full, 0.0)
            clustering = hierarchical_cluster(_matrix_from_full(full), linkage=linkage, target_clusters=2)
            heights = [h for _, _, h in clustering.dendrogram]
            assert len(heights) == 7
            assert all(heights[k + 1] >= heights[k] - 1e-12 for k in range(len(heights) - 1))

    def test_merge_tie_broken_by_smallest_ids(self):
        # four equidistant points: first merge must be (0, 1)
        full = np.ones((4, 4)) - np.eye(4)
        clustering = hierarchical_cluster(_matrix_from_full(full), target_clusters=3)
        left, right, _ = clustering.dendrogram[0]
        assert (left, right) == (0, 1)

    def test_target_bounds(self):
        m = _matrix_from_full(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            hierarchical_cluster(m, target_clusters=0)
        with pytest.raises(ValueError):
            hierarchical_cluster(m, target_clusters=4)


class TestPartitional:
    def test_separated_blobs_found_for_any_seed(self, rng):
        values = [[0.0], [0.2], [0.4], [100.0], [100.2], [100.4]]
        ds = _dataset_from_values(values)
        m = distance_matrix(ds)
        for seed in range(8):
            clustering = partitional_cluster(m, k=2, seed=seed)
            a = clustering.assignment
            assert len(set(a[:3])) == 1 and len(set(a[3:])) == 1 and a[0] != a[5]

    def test_k_equals_n_zero_cost(self):
        ds = _dataset_from_values([[0.0], [5.0], [9.0]])
        m = distance_matrix(ds)
        clustering = partitional_cluster(m, k=3, seed=1)
        assert sorted(clustering.assignment.tolist()) == [1, 2, 3]
        assert clustering.cost_history[-1] == 0.0

    def test_same_seed_reproducible(self, rng):
        full = rng.uniform(0.5, 5.0, size=(9, 9))
        full = (full + full.T) / 2
        np.fill_diagonal(full, 0.0)
        m = _matrix_from_full(full)
        a = partitional_cluster(m, k=3, seed=42)
        b = partitional_cluster(m, k=3, seed=42)
        assert np.array_equal(a.assignment, b.assignment)
        assert a.medoids == b.medoids

    def test_duplicate_points_do_not_break_kmedoids(self):
        ds = _dataset_from_values([[0.0], [0.0], [0.0], [7.0], [7.0]])
        m = distance_matrix(ds)
        for seed in range(6):
            clustering = partitional_cluster(m, k=2, seed=seed)
            assert clustering.assignment.shape == (5,)
            assert clustering.assignment.min() == 1
            h = clustering.cost_history
            assert all(h[t + 1] <= h[t] + 1e-12 for t in range(len(h) - 1))

    def test_cost_history_non_increasing_over_seeds(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            full = rng.uniform(0.1, 10.0, size=(12, 12))
            full = (full + full.T) / 2
            np.fill_diagonal(full, 0.0)
            clustering = partitional_cluster(_matrix_from_full(full), k=3, seed=seed)
            h = clustering.cost_history
            assert all(h[t + 1] <= h[t] + 1e-9 for t in range(len(h) - 1))


class TestCvi:
    def test_hand_computed_indices(self):
        ds = _dataset_from_values([[0.0], [0.1], [10.0], [10.1]])
        m = distance_matrix(ds)
        clustering = hierarchical_cluster(m, target_clusters=2)
        values = cvi_suite(m, clustering)
        # independent hand computation of the mean silhouette
        expected_sil = ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95) / 2.0
        assert values["silhouette"] == pytest.approx(expected_sil, abs=1e-12)
        assert values["dunn"] == pytest.approx(9.9 / 0.1)
        assert values["davies_bouldin"] > 0.0
        assert values["davies_bouldin_star"] >= values["davies_bouldin"] - 1e-12
        assert values["calinski_harabasz"] > 1.0
        assert set(values) == set(CVI_ORIENTATION)

    def test_single_cluster_rejected(self):
        ds = _dataset_from_values([[0.0], [1.0]])
        m = distance_matrix(ds)
        clustering = Clustering(assignment=np.array([1, 1]), method="manual")
        with pytest.raises(ValueError):
            cvi_suite(m, clustering)

    def test_all_singletons_rejected(self):
        ds = _dataset_from_values([[0.0], [1.0], [2.0]])
        m = distance_matrix(ds)
        clustering = Clustering(assignment=np.array([1, 2, 3]), method="manual")
        with pytest.raises(SingletonOnly):
            cvi_suite(m, clustering)

    def test_invariant_under_relabeling(self, rng):
        full = rng.uniform(0.5, 4.0, size=(8, 8))
        full = (full + full.T) / 2
        np.fill_diagonal(full, 0.0)
        m = _matrix_from_full(full)
        a = Clustering(assignment=np.array([1, 1, 2, 2, 2, 3, 3, 3]), method="manual")
        b = Clustering(assignment=np.array([3, 3, 1, 1, 1, 2, 2, 2]), method="manual")
        va, vb = cvi_suite(m, a), cvi_suite(m, b)
        for key in va:
            assert va[key] == pytest.approx(vb[key], abs=1e-12)


class TestComposition:
    def test_single_participant_dataset(self):
        items = tuple(LabeledSeries(make_series([float(k)]), "N", "solo") for k in range(4))
        ds = Dataset(items)
        clustering = Clustering(assignment=np.array([1, 1, 2, 2]), method="manual")
        report = composition_report(clustering, ds)
        assert report[1]["by_participant"] == {"solo": 1.0}
        assert report[2]["by_participant"] == {"solo": 1.0}

    def test_half_half_cluster(self):
        items = (
            LabeledSeries(make_series([0.0]), "N", "a"),
            LabeledSeries(make_series([1.0]), "N", "a"),
            LabeledSeries(make_series([2.0]), "E", "b"),
            LabeledSeries(make_series([3.0]), "E", "b"),
        )
        ds = Dataset(items)
        clustering = Clustering(assignment=np.array([1, 1, 1, 1]), method="manual")
        report = composition_report(clustering, ds)
        assert report[1]["by_participant"] == {"a": 0.5, "b": 0.5}
        assert report[1]["by_skill"] == {"E": 0.5, "N": 0.5}

    def test_proportions_sum_to_one_and_recover_global_frequencies(self, rng):
        participants = ["a", "b", "c"]
        items = tuple(
            LabeledSeries(make_series([float(k)]), "N", participants[k % 3]) for k in range(9)
        )
        ds = Dataset(items)
        assignment = np.array([1, 1, 1, 2, 2, 3, 3, 3, 3])
        report = composition_report(Clustering(assignment=assignment, method="manual"), ds)
        totals = {p: 0.0 for p in participants}
        for c, info in report.items():
            assert sum(info["by_participant"].values()) == pytest.approx(1.0, abs=1e-12)
            assert sum(info["by_skill"].values()) == pytest.approx(1.0, abs=1e-12)
            for p, frac in info["by_participant"].items():
                totals[p] += frac * info["size"]
        for p in participants:
            assert totals[p] == pytest.approx(3.0)
