import numpy as np
import pytest

from warpscore.distance import ConstraintBand, dtw_distance
from warpscore.envelope import (
    Envelope,
    default_window,
    envelope_prefix,
    keogh_envelope,
    lb_keogh,
    outside_distance,
    resample_envelope,
    summative_envelope,
    summative_tunnel,
)
from warpscore.errors import EmptySet, LengthMismatch, ValidationError
from warpscore.prototype import dtwmp_multi

import oracles
from conftest import make_series


class TestKeoghEnvelope:
    def test_constant_series_collapses(self):
        s = make_series([2.0, 2.0, 2.0, 2.0])
        env = keogh_envelope(s, 2)
        assert np.array_equal(env.upper, s.values)
        assert np.array_equal(env.lower, s.values)

    def test_hand_window_example(self):
        env = keogh_envelope(make_series([1.0, 5.0, 1.0]), 1)
        assert np.array_equal(env.upper[:, 0], [5.0, 5.0, 5.0])
        assert np.array_equal(env.lower[:, 0], [1.0, 1.0, 1.0])

    def test_zero_radius_identity(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 10, 2))
        env = keogh_envelope(s, 0)
        assert np.array_equal(env.upper, s.values)
        assert np.array_equal(env.lower, s.values)

    def test_series_inside_own_envelope(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 30, 3))
        for r in (1, 3, 7):
            env = keogh_envelope(s, r)
            assert env.contains(s)

    def test_per_variable_windows(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 15, 2))
        env = keogh_envelope(s, 2)
        for v in range(2):
            for i in range(15):
                window = s.values[max(0, i - 2) : i + 3, v]
                assert env.upper[i, v] == window.max()
                assert env.lower[i, v] == window.min()

    def test_radius_bounds_validated(self):
        s = make_series([1.0, 2.0])
        with pytest.raises(ValueError):
            keogh_envelope(s, 2)
        with pytest.raises(ValueError):
            keogh_envelope(s, -1)


class TestLbKeogh:
    def test_source_series_scores_zero(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 20, 2))
        assert lb_keogh(keogh_envelope(s, 3), s) == 0.0

    def test_uniform_exceedance_example(self):
        env = Envelope(upper=np.full((3, 1), 5.0), lower=np.full((3, 1), 1.0), window=1)
        assert lb_keogh(env, make_series([6.0, 6.0, 6.0])) == pytest.approx(np.sqrt(3.0))

    def test_soundness_against_banded_dtw(self):
        """lb_keogh(env(q, r), c) <= dtw(q, c) under a Sakoe-Chiba band of radius r."""
        rng = np.random.default_rng(99)
        for trial in range(200):
            n = int(rng.integers(4, 30))
            v = int(rng.integers(1, 4))
            r = int(rng.integers(0, max(1, n // 3)))
            q = make_series(oracles.rand_multiseries(rng, n, v))
            c = make_series(oracles.rand_multiseries(rng, n, v))
            bound = lb_keogh(keogh_envelope(q, r), c)
            actual = dtw_distance(q, c, band=ConstraintBand.sakoe_chiba(r))
            assert bound <= actual + 1e-9, f"trial {trial}: {bound} > {actual}"

    def test_length_mismatch(self):
        env = keogh_envelope(make_series([1.0, 2.0, 3.0]), 1)
        with pytest.raises(LengthMismatch):
            lb_keogh(env, make_series([1.0, 2.0]))


class TestSummativeEnvelope:
    def test_single_envelope_unchanged(self, rng):
        env = keogh_envelope(make_series(oracles.rand_multiseries(rng, 10)), 2)
        combined = summative_envelope([env])
        assert np.array_equal(combined.upper, env.upper)
        assert np.array_equal(combined.lower, env.lower)

    def test_elementwise_max_example(self):
        e1 = Envelope(upper=np.array([[1.0], [2.0]]), lower=np.array([[0.0], [0.0]]), window=0)
        e2 = Envelope(upper=np.array([[2.0], [1.0]]), lower=np.array([[-1.0], [0.5]]), window=0)
        combined = summative_envelope([e1, e2])
        assert np.array_equal(combined.upper[:, 0], [2.0, 2.0])
        assert np.array_equal(combined.lower[:, 0], [-1.0, 0.0])

    def test_contains_every_contributor(self, rng):
        envs = [keogh_envelope(make_series(oracles.rand_multiseries(rng, 12, 2)), 2) for _ in range(4)]
        combined = summative_envelope(envs)
        for env in envs:
            assert np.all(combined.upper >= env.upper)
            assert np.all(combined.lower <= env.lower)

    def test_contributing_series_score_zero(self, rng):
        series = [make_series(oracles.rand_multiseries(rng, 12, 2)) for _ in range(4)]
        combined = summative_envelope([keogh_envelope(s, 1) for s in series])
        for s in series:
            score, trace = outside_distance(s, combined)
            assert score == 0.0
            assert np.all(trace == 0.0)

    def test_empty_set_and_length_mismatch(self):
        with pytest.raises(EmptySet):
            summative_envelope([])
        e1 = keogh_envelope(make_series([1.0, 2.0]), 0)
        e2 = keogh_envelope(make_series([1.0, 2.0, 3.0]), 0)
        with pytest.raises(LengthMismatch):
            summative_envelope([e1, e2])

    def test_source_count_accumulates(self, rng):
        envs = [keogh_envelope(make_series(oracles.rand_multiseries(rng, 8)), 1) for _ in range(3)]
        assert summative_envelope(envs).source_count == 3


class TestOutsideDistance:
    def test_inside_everywhere_is_zero(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 25, 2))
        score, trace = outside_distance(s, keogh_envelope(s, 2))
        assert score == 0.0 and np.all(trace == 0.0)

    def test_upper_exceedance_example(self):
        env = Envelope(upper=np.array([[2.0]]), lower=np.array([[0.0]]), window=0)
        score, trace = outside_distance(make_series([3.0]), env)
        assert score == 1.0 and trace.tolist() == [1.0]

    def test_lower_exceedance_example(self):
        env = Envelope(upper=np.array([[2.0]]), lower=np.array([[0.0]]), window=0)
        score, trace = outside_distance(make_series([-2.0]), env)
        assert score == 2.0

    def test_multivariate_euclidean_aggregation(self):
        env = Envelope(upper=np.zeros((1, 2)), lower=np.zeros((1, 2)), window=0)
        score, _ = outside_distance(make_series([[3.0, 4.0]]), env)
        assert score == pytest.approx(5.0)

    def test_widening_never_increases_score(self, rng):
        s = make_series(oracles.rand_multiseries(rng, 20, 2))
        env = keogh_envelope(make_series(oracles.rand_multiseries(rng, 20, 2)), 1)
        base, _ = outside_distance(s, env)
        wider = Envelope(upper=env.upper + 0.5, lower=env.lower - 0.5, window=env.window)
        widened, _ = outside_distance(s, wider)
        assert widened <= base

    def test_length_mismatch(self):
        env = keogh_envelope(make_series([1.0, 2.0]), 0)
        with pytest.raises(LengthMismatch):
            outside_distance(make_series([1.0]), env)


class TestEnvelopeHelpers:
    def test_resample_preserves_bounds_order(self, rng):
        env = keogh_envelope(make_series(oracles.rand_multiseries(rng, 14, 2)), 2)
        out = resample_envelope(env, 31)
        assert out.n == 31
        assert np.all(out.upper >= out.lower)

    def test_prefix_fraction(self, rng):
        env = keogh_envelope(make_series(oracles.rand_multiseries(rng, 20)), 1)
        prefix = envelope_prefix(env, 0.5)
        assert prefix.n == 10
        assert np.array_equal(prefix.upper, env.upper[:10])

    def test_prefix_resampled_to_target(self, rng):
        env = keogh_envelope(make_series(oracles.rand_multiseries(rng, 20)), 1)
        assert envelope_prefix(env, 0.3, target_length=9).n == 9

    def test_default_window_is_five_percent(self):
        assert default_window(500) == 25
        assert default_window(10) == 1
        assert default_window(500, pct=0.1) == 50

    def test_envelope_validation(self):
        with pytest.raises(ValidationError):
            Envelope(upper=np.zeros((2, 1)), lower=np.ones((2, 1)), window=0)


class TestSummativeTunnel:
    def test_prototype_and_contributors_inside(self, rng):
        members = [make_series(oracles.rand_multiseries(rng, int(rng.integers(10, 16)), 2)) for _ in range(6)]
        proto = dtwmp_multi(members).series
        tunnel = summative_tunnel(proto, members, window=1)
        for contrib in tunnel.contributors:
            score, _ = outside_distance(contrib, tunnel.envelope)
            assert score == 0.0
        assert tunnel.contributors[0] is proto
        assert len(tunnel.contributors) == 5  # prototype + 4 nearest
        assert len(tunnel.member_indices) == 4

    def test_small_cluster_takes_all_members(self, rng):
        members = [make_series(oracles.rand_multiseries(rng, 10)) for _ in range(2)]
        tunnel = summative_tunnel(members[0], members, window=1)
        assert len(tunnel.contributors) == 3

    def test_dtwmp_prototype_scores_zero_after_common_length_resampling(self):
        """Prototype of the contributing series stays inside their summative envelope."""
        for seed in range(6):
            rng = np.random.default_rng(seed)
            members = [
                make_series(oracles.rand_multiseries(rng, int(rng.integers(12, 20)), 2))
                for _ in range(5)
            ]
            proto = dtwmp_multi(members).series
            tunnel = summative_tunnel(proto, members, window=default_window(proto.n))
            score, _ = outside_distance(proto, tunnel.envelope)
            assert score == 0.0
