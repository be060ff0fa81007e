import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import audio_oracle
from touchtell.audio import (AudioFeatureConfig, audio_features, frame_signal,
                             mel_filterbank, stft_frames)
from touchtell.core import AudioClip
from touchtell.errors import SizeError, ValidationError

SR = 44100


def sine(freq=1000.0, n=441000, amp=1.0):
    return amp * np.sin(2 * np.pi * freq * np.arange(n) / SR)


def random_clip(rng):
    n = int(rng.integers(2048, 22050))
    t = np.arange(n) / SR
    x = rng.normal(0, rng.uniform(0.01, 0.3), n)
    for _ in range(int(rng.integers(0, 4))):
        x += rng.uniform(0.05, 0.4) * np.sin(2 * np.pi * rng.uniform(50, 15000) * t)
    return AudioClip(np.clip(np.round(x * 32767), -32768, 32767).astype(np.int16))


def test_frame_count_for_ten_seconds():
    assert len(frame_signal(np.zeros(441000), AudioFeatureConfig())) == 858


def test_zero_clip_has_zero_spectra():
    assert not stft_frames(np.zeros(441000)).any()
    f = audio_features(AudioClip(np.zeros(441000, np.int16)))
    assert f.rmse == 0 and f.zero_crossing_rate == 0


def test_sine_peak_bin():
    peaks = stft_frames(sine()).argmax(axis=1)
    assert set(peaks.tolist()) == {round(1000 * 2048 / SR)}


def test_sine_summary_values():
    f = audio_features(sine())
    assert f.spectral_centroid == pytest.approx(1000, rel=0.05)
    assert f.rmse == pytest.approx(1 / np.sqrt(2), rel=0.01)
    assert f.zero_crossing_rate == pytest.approx(2000 / SR, rel=0.05)


def test_matches_reference_extractor_100_clips():
    rng = np.random.default_rng(7)
    for _ in range(100):
        clip = random_clip(rng)
        got = audio_features(clip).as_array()
        want = audio_oracle(clip.as_float())
        np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-9)


def test_filterbank_shape_and_peaks():
    fb = mel_filterbank(AudioFeatureConfig(), SR)
    assert fb.shape == (26, 1025)
    assert np.all(fb.max(axis=1) <= 1.0) and np.all(fb.max(axis=1) > 0.5)


def test_short_clip_and_bad_config():
    with pytest.raises(SizeError):
        audio_features(np.zeros(100))
    with pytest.raises(ValidationError):
        AudioFeatureConfig(frame_size=1000)
    with pytest.raises(ValidationError):
        AudioFeatureConfig(hop=4096)
    with pytest.raises(ValidationError):
        AudioFeatureConfig(n_mfcc=30)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 20.0))
def test_amplitude_scaling(seed, g):
    x = np.random.default_rng(seed).normal(0, 0.1, 8192)
    a, b = audio_features(x), audio_features(g * x)
    assert b.rmse == pytest.approx(g * a.rmse, rel=1e-9)
    assert b.spectral_centroid == pytest.approx(a.spectral_centroid, rel=1e-9)
    assert b.spectral_bandwidth == pytest.approx(a.spectral_bandwidth, rel=1e-9)
    assert b.zero_crossing_rate == a.zero_crossing_rate
    # a gain adds 2 ln g to every log energy, which only the 0th ortho DCT term sees
    shift = 2 * np.log(g) * np.sqrt(26)
    assert b.mfcc[0] - a.mfcc[0] == pytest.approx(shift, abs=1e-9)
    np.testing.assert_allclose(b.mfcc[1:], a.mfcc[1:], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12))
def test_time_reversal_with_disjoint_frames(seed, n_frames):
    cfg = AudioFeatureConfig(frame_size=1024, hop=1024)
    x = np.random.default_rng(seed).normal(0, 0.2, 1024 * n_frames)
    np.testing.assert_allclose(audio_features(x[::-1], cfg).as_array(),
                               audio_features(x, cfg).as_array(), rtol=1e-9, atol=1e-9)


def test_time_reversal_default_frames_approximately():
    x = np.random.default_rng(3).normal(0, 0.2, 441000)
    np.testing.assert_allclose(audio_features(x[::-1]).as_array(),
                               audio_features(x).as_array(), rtol=1e-3, atol=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_spectral_values_below_nyquist(seed):
    f = audio_features(random_clip(np.random.default_rng(seed)))
    assert 0 <= f.spectral_centroid <= SR / 2
    assert 0 <= f.spectral_bandwidth <= SR / 2
    assert np.all(np.isfinite(f.as_array()))
