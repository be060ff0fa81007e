import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tactile_oracle
from touchtell.core import TouchRecording
from touchtell.errors import InsufficientDataError
from touchtell.sensor import TransductionConfig, activation_to_count, scan_movie
from touchtell.tactile import TactileFeatureConfig, detect_touch_events, tactile_features

TS = np.arange(450) * 22


def recording_from_active(active_frames, n=450):
    counts = np.full((n, 5, 5), 28)
    for f in active_frames:
        counts[f, 2, 2] = 2000
    return TouchRecording(np.arange(n), TS[:n], counts)


def random_recording(rng, n=None):
    n = int(rng.integers(6, 120)) if n is None else n
    ts = np.cumsum(rng.integers(18, 27, n))
    movie = rng.random((n, 5, 5)) ** 3 * (rng.random((n, 1, 1)) < 0.6)
    return scan_movie(movie, ts, rng=rng)


def test_zero_recording():
    rec = TouchRecording(np.arange(450), TS, np.zeros((450, 5, 5), int))
    assert detect_touch_events(rec) == []
    assert np.all(tactile_features(rec).as_array() == 0)


def test_merge_within_debounce_gap():
    events = detect_touch_events(recording_from_active(list(range(10, 21)) + list(range(23, 31))))
    assert [(e.start_frame, e.end_frame) for e in events] == [(10, 30)]


def test_separate_events():
    events = detect_touch_events(recording_from_active(list(range(10, 21)) + list(range(40, 51))))
    assert [(e.start_frame, e.end_frame) for e in events] == [(10, 20), (40, 50)]


def test_single_constant_taxel():
    cfg = TransductionConfig(noise_std_counts=0.0)
    movie = np.zeros((450, 5, 5))
    movie[:, 1, 3] = 1.0
    ts = np.round(np.arange(450) * 1000 / 45).astype(int)
    f = tactile_features(scan_movie(movie, ts, cfg))
    assert f.num_touches == 1
    assert f.mean_touch_duration == pytest.approx(10.0, abs=0.05)
    assert f.contact_area == 1
    assert f.pressure_gradient == 0
    assert f.max_pressure == pytest.approx((activation_to_count(1.0, cfg) - 28) / 4095)


def test_too_short():
    with pytest.raises(InsufficientDataError):
        tactile_features(TouchRecording([0], [0], np.zeros((1, 5, 5), int)))


def test_matches_bruteforce_oracle_200_recordings():
    rng = np.random.default_rng(42)
    for _ in range(200):
        rec = random_recording(rng)
        got = tactile_features(rec).as_array()
        want = np.array(tactile_oracle(rec.counts, rec.timestamp_ms))
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.permutations(list(range(25))))
def test_taxel_permutation_invariance(seed, perm):
    rec = random_recording(np.random.default_rng(seed))
    shuffled = rec.counts.reshape(len(rec), 25)[:, perm].reshape(-1, 5, 5)
    other = TouchRecording(rec.seq, rec.timestamp_ms, shuffled)
    assert tactile_features(other) == tactile_features(rec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_feature_invariants(seed):
    f = tactile_features(random_recording(np.random.default_rng(seed)))
    assert f.max_pressure >= f.mean_pressure >= 0
    assert f.pressure_std ** 2 == pytest.approx(f.pressure_variance, abs=1e-12)
    assert f.min_touch_duration <= f.mean_touch_duration <= f.max_touch_duration
    assert isinstance(f.num_touches, int) and f.num_touches >= 0


def _scaled(p_levels, g):
    # counts carrying exactly g * p above a zero baseline
    counts = np.round(np.asarray(p_levels) * g * 4095).astype(int)
    return TouchRecording(np.arange(len(counts)), TS[:len(counts)], counts)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.5, 0.75, 1.0]))
def test_scaling_pressures(seed, g):
    rng = np.random.default_rng(seed)
    p = np.zeros((60, 5, 5))
    p[5:] = rng.choice([0.0, 0.4, 0.8], (55, 5, 5))  # far from threshold under g >= 0.5
    base, scaled = tactile_features(_scaled(p, 1.0)), tactile_features(_scaled(p, g))
    tol = 2 / 4095
    assert scaled.mean_pressure == pytest.approx(g * base.mean_pressure, abs=tol)
    assert scaled.max_pressure == pytest.approx(g * base.max_pressure, abs=tol)
    assert scaled.pressure_std == pytest.approx(g * base.pressure_std, abs=tol)
    assert scaled.pressure_variance == pytest.approx(g * g * base.pressure_variance, abs=tol)
    assert scaled.contact_area == base.contact_area
    assert scaled.num_touches == base.num_touches


def test_config_validation():
    with pytest.raises(ValueError):
        TactileFeatureConfig(activity_threshold=1.2)
    with pytest.raises(ValueError):
        TactileFeatureConfig(debounce_gap=-1)
