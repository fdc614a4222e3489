import numpy as np
import pytest

from warpscore.core import MultiSeries
from warpscore.dynamic import (
    SessionState,
    adapt_prototype,
    batch_score,
    dynamic_score,
    finish,
    ingest,
    phase_estimate,
    replay,
)
from warpscore.envelope import Envelope, default_window, outside_distance, summative_tunnel
from warpscore.errors import InvalidWeight, NonFiniteSample, TooShort
from warpscore.prototype import dtwmp_multi, pam_prototype

import oracles
from conftest import make_series


def _wavy(n, phase=0.0, drift=0.0, noise=None, rng=None):
    t = np.linspace(0.0, 1.0, n)
    x = np.sin(2 * np.pi * (t + phase)) + drift * t
    y = np.cos(2 * np.pi * t) - 0.5 * t
    z = 5.0 * t + 0.8 * np.sin(np.pi * t)
    vals = np.column_stack([x, y, z])
    if noise:
        vals = vals + rng.normal(0.0, noise, vals.shape)
    return MultiSeries(vals)


@pytest.fixture(scope="module")
def family():
    rng = np.random.default_rng(12345)
    members = [
        _wavy(int(rng.integers(130, 160)), phase=0.01 * k, noise=0.02, rng=rng) for k in range(5)
    ]
    proto = dtwmp_multi(members).series
    tunnel = summative_tunnel(proto, members, window=default_window(proto.n))
    prototypes = {1: proto}
    envelopes = {1: tunnel.envelope}
    return members, proto, tunnel, prototypes, envelopes


class TestPhaseEstimate:
    def test_exact_prefix_recovers_decile(self):
        proto = _wavy(200)
        for decile in (10, 30, 50, 80, 100):
            k = int(round(decile / 100 * 200))
            partial = MultiSeries(proto.values[:k])
            got, nd = phase_estimate(partial, proto)
            assert got == decile
            assert nd == pytest.approx(0.0, abs=1e-12)

    def test_time_dilated_prefix_still_matches(self):
        proto = _wavy(180)
        k = int(round(0.5 * 180))
        dilated = MultiSeries(np.repeat(proto.values[:k], 2, axis=0))
        got, nd = phase_estimate(dilated, proto)
        assert got == 50
        assert nd == pytest.approx(0.0, abs=1e-12)

    def test_too_short_inputs(self):
        proto = _wavy(50)
        with pytest.raises(TooShort):
            phase_estimate(MultiSeries(proto.values[:1]), proto)
        with pytest.raises(TooShort):
            phase_estimate(_wavy(20), _wavy(9))

    def test_downsampling_keeps_estimates_usable(self):
        proto = _wavy(900)
        partial = MultiSeries(proto.values[: int(0.4 * 900)])
        got, _ = phase_estimate(partial, proto, max_len=300)
        assert got == 40


class TestDynamicScore:
    def test_inside_buffer_scores_zero(self, family):
        members, proto, tunnel, _, _ = family
        partial = MultiSeries(tunnel.contributors[1].values[: proto.n // 2])
        # a contributor prefix compared against the matching envelope prefix
        score, prop = dynamic_score(partial, proto, tunnel.envelope, 50)
        assert score == 0.0 and prop == 0.0

    def test_constructed_half_outside(self):
        proto = MultiSeries(np.zeros(10))
        env = Envelope(upper=np.full((10, 1), 1.0), lower=np.full((10, 1), -1.0), window=0)
        vals = np.zeros(10)
        vals[5:] = 2.0  # exceed the upper bound by 1 on half the steps
        score, prop = dynamic_score(MultiSeries(vals), proto, env, 100)
        assert score == pytest.approx(5.0)
        assert prop == pytest.approx(0.5)

    def test_full_decile_equals_batch_outside_distance(self, family):
        members, proto, tunnel, _, _ = family
        series = tunnel.contributors[2]
        score, prop = dynamic_score(series, proto, tunnel.envelope, 100)
        expected, trace = outside_distance(series, tunnel.envelope)
        assert score == expected
        assert prop == (trace > 0).mean()

    def test_invalid_decile(self, family):
        members, proto, tunnel, _, _ = family
        with pytest.raises(ValueError):
            dynamic_score(proto, proto, tunnel.envelope, 55)


class TestStreaming:
    def test_contributor_replay_scores_zero_with_no_alarms(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        for contributor in tunnel.contributors:
            state = replay(contributor, prototypes, envelopes, cluster=1)
            assert state.score == 0.0
            assert state.alarms == []
            assert state.events[-1]["final"] is True

    def test_final_score_equals_batch_score(self, family, rng):
        members, proto, tunnel, prototypes, envelopes = family
        # arbitrary recordings, not just contributors
        for k in range(3):
            rec = _wavy(140 + 7 * k, noise=0.2, rng=rng)
            state = replay(rec, prototypes, envelopes, cluster=1)
            expected, _ = batch_score(rec, envelopes[1])
            assert state.score == expected

    def test_displaced_stream_raises_alarm_within_cadence(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        base = tunnel.contributors[1]
        vals = base.values.copy()
        onset = 60
        vals[onset:, 0] += 10.0  # +10 sigma-scale displacement on one channel
        state = replay(MultiSeries(vals), prototypes, envelopes, cluster=1)
        assert state.alarms, "displacement must raise an alarm"
        first = state.alarms[0]
        assert first.index - onset <= state.cadence
        assert first.detected_at - onset <= state.cadence + state.debounce - 1
        assert state.score > 0.0

    def test_cadence_one_and_default_agree_on_final_score(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        rec = tunnel.contributors[3]
        fast = replay(rec, prototypes, envelopes, cadence=25, cluster=1)
        slow = replay(rec, prototypes, envelopes, cadence=1, cluster=1)
        assert fast.score == slow.score

    def test_replay_reproducible(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        vals = tunnel.contributors[1].values.copy()
        vals[80:, 1] -= 8.0
        rec = MultiSeries(vals)
        a = replay(rec, prototypes, envelopes, cluster=1)
        b = replay(rec, prototypes, envelopes, cluster=1)
        assert a.events == b.events
        assert a.alarms == b.alarms

    def test_score_non_decreasing_on_contained_replay(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        state = replay(tunnel.contributors[2], prototypes, envelopes, cluster=1)
        scores = [e["score"] for e in state.events]
        assert all(scores[k + 1] >= scores[k] - 1e-12 for k in range(len(scores) - 1))

    def test_phase_non_decreasing_on_prototype_replay(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        state = replay(proto, prototypes, envelopes, cluster=1)
        phases = [e["phase"] for e in state.events]
        assert all(phases[k + 1] >= phases[k] for k in range(len(phases) - 1))
        assert phases[-1] == 100

    def test_bad_stream_distinguishable_from_first_ten_percent(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        k = max(2, int(round(0.1 * proto.n)))
        good_nd = []
        for contrib in tunnel.contributors[1:]:
            prefix = MultiSeries(contrib.values[:k])
            _, nd = phase_estimate(prefix, proto)
            good_nd.append(nd)
        bad_vals = tunnel.contributors[1].values.copy()
        bad_vals[:, 0] += 6.0
        bad_vals[:, 2] -= 6.0
        _, bad_nd = phase_estimate(MultiSeries(bad_vals[:k]), proto)
        assert bad_nd > max(good_nd)

    def test_cluster_assigned_when_not_given(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        state = replay(tunnel.contributors[1], prototypes, envelopes)
        assert state.cluster == 1

    def test_non_finite_sample_rejected(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        state = SessionState(n_vars=3)
        with pytest.raises(NonFiniteSample):
            ingest(state, [np.nan, 0.0, 0.0], prototypes, envelopes)

    def test_buffer_grows_per_ingest(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        state = SessionState(n_vars=3, cluster=1)
        for k in range(30):
            ingest(state, proto.values[k], prototypes, envelopes)
            assert len(state) == k + 1

    def test_finish_requires_samples(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        with pytest.raises(TooShort):
            finish(SessionState(n_vars=3, cluster=1), prototypes, envelopes)

    def test_pace_reflects_dilation(self, family):
        members, proto, tunnel, prototypes, envelopes = family
        slow = MultiSeries(np.repeat(proto.values, 2, axis=0))
        state = replay(slow, prototypes, envelopes, cluster=1)
        assert state.pace == pytest.approx(2.0, rel=0.05)


class TestAdaptPrototype:
    def test_weighted_self_merge_is_identity(self, family):
        members, proto, tunnel, _, _ = family
        pam = pam_prototype(members)
        for w in (0.1, 0.5, 0.9):
            result = adapt_prototype(members, pam, pam.series, mode="weighted", w=w)
            assert np.allclose(result.prototype.series.values, pam.series.values, atol=1e-12)

    def test_weighted_small_w_limit(self):
        members = [make_series([0.0, 1.0, 2.0])]
        pam = pam_prototype(members)
        result = adapt_prototype(members, pam, members[0], mode="weighted", w=1e-9)
        assert np.allclose(result.prototype.series.values, pam.series.values, atol=1e-6)

    def test_invalid_weight(self, family):
        members, proto, tunnel, _, _ = family
        pam = pam_prototype(members)
        for w in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(InvalidWeight):
                adapt_prototype(members, pam, members[0], mode="weighted", w=w)

    def test_recompute_with_duplicate_outlier_keeps_pam_prototype(self):
        # enumeration oracle: duplicating the far member must not move the medoid
        members = [
            make_series([[0.0, 0.0]]),
            make_series([[0.1, 0.0]]),
            make_series([[0.0, 0.1]]),
            make_series([[5.0, 5.0]]),
        ]
        pam = pam_prototype(members)
        sums = [
            sum(oracles.brute_force_dtw(a.values, b.values, "euclidean") for b in members + [members[3]])
            for a in members + [members[3]]
        ]
        assert int(np.argmin(sums)) == pam.params["index"]
        result = adapt_prototype(members, pam, members[3], mode="recompute")
        assert np.array_equal(result.prototype.series.values, pam.series.values)

    def test_near_series_triggers_envelope_regeneration(self, family):
        members, proto, tunnel, _, _ = family
        dtwmp = dtwmp_multi(members)
        near = MultiSeries(dtwmp.series.values + 0.001)
        result = adapt_prototype(members, dtwmp, near, mode="weighted", w=0.3)
        assert result.new_rank < 4
        assert result.envelope is not None
        score, _ = outside_distance(result.contributors[0], result.envelope)
        assert score == 0.0

    def test_far_series_skips_envelope(self, family):
        members, proto, tunnel, _, _ = family
        dtwmp = dtwmp_multi(members)
        far = MultiSeries(members[0].values + 50.0)
        result = adapt_prototype(members, dtwmp, far, mode="weighted", w=0.2)
        assert result.new_rank >= 4
        assert result.envelope is None
