"""Frame-level spectral audio features, averaged over a clip.

Produces the 17-value audio block: mfcc_1..mfcc_13 (mfcc_1 is the 0th
cepstral coefficient), spectral centroid and bandwidth in Hz, zero crossing
rate per sample and RMS energy of [-1, 1] samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .core import AUDIO_FEATURES, AudioClip, SAMPLE_RATE_HZ
from .errors import SizeError, ValidationError

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class AudioFeatureConfig:
    frame_size: int = 2048
    hop: int = 512
    n_mel_filters: int = 26
    n_mfcc: int = 13
    fmin: float = 0.0
    fmax: float | None = None  # None -> Nyquist

    def __post_init__(self):
        if self.frame_size <= 0 or self.frame_size & (self.frame_size - 1):
            raise ValidationError("frame_size must be a power of two")
        if not 0 < self.hop <= self.frame_size:
            raise ValidationError("hop must lie in (0, frame_size]")
        if not 0 < self.n_mfcc <= self.n_mel_filters:
            raise ValidationError("need 0 < n_mfcc <= n_mel_filters")


@dataclass(frozen=True)
class AudioFeatures:
    mfcc: tuple
    spectral_centroid: float
    spectral_bandwidth: float
    zero_crossing_rate: float
    rmse: float

    def as_array(self):
        return np.array([*self.mfcc, self.spectral_centroid, self.spectral_bandwidth,
                         self.zero_crossing_rate, self.rmse], dtype=np.float64)

    def as_dict(self):
        return dict(zip(AUDIO_FEATURES, self.as_array().tolist()))


def _samples(clip):
    if isinstance(clip, AudioClip):
        return clip.as_float(), clip.sample_rate_hz
    return np.asarray(clip, dtype=np.float64), SAMPLE_RATE_HZ


def frame_signal(x, cfg):
    if len(x) < cfg.frame_size:
        raise SizeError(f"clip of {len(x)} samples is shorter than one frame ({cfg.frame_size})")
    return np.lib.stride_tricks.sliding_window_view(x, cfg.frame_size)[::cfg.hop]


def stft_frames(clip, cfg=AudioFeatureConfig()):
    """Magnitude spectra, one row per Hann-windowed frame."""
    x, _ = _samples(clip)
    frames = frame_signal(x, cfg)
    return np.abs(np.fft.rfft(frames * np.hanning(cfg.frame_size), axis=1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(cfg, sample_rate):
    """Triangular filters, equally spaced on the mel scale, over rfft bins."""
    fmax = sample_rate / 2.0 if cfg.fmax is None else cfg.fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(fmax), cfg.n_mel_filters + 2))
    freqs = np.fft.rfftfreq(cfg.frame_size, 1.0 / sample_rate)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


def audio_features(clip, cfg=AudioFeatureConfig()):
    x, sr = _samples(clip)
    frames = frame_signal(x, cfg)
    mag = np.abs(np.fft.rfft(frames * np.hanning(cfg.frame_size), axis=1))
    freqs = np.fft.rfftfreq(cfg.frame_size, 1.0 / sr)

    total = mag.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    centroid = np.where(total > 0, mag @ freqs / safe, 0.0)
    spread = ((freqs[None, :] - centroid[:, None]) ** 2 * mag).sum(axis=1)
    bandwidth = np.where(total > 0, np.sqrt(spread / safe), 0.0)

    nonneg = frames >= 0
    zcr = np.count_nonzero(nonneg[:, 1:] != nonneg[:, :-1], axis=1) / (cfg.frame_size - 1)
    rms = np.sqrt(np.mean(frames ** 2, axis=1))

    energies = (mag ** 2) @ mel_filterbank(cfg, sr).T
    log_e = np.log(np.maximum(energies, LOG_FLOOR))
    mfcc = dct(log_e, type=2, norm="ortho", axis=1)[:, :cfg.n_mfcc]

    return AudioFeatures(
        mfcc=tuple(float(v) for v in mfcc.mean(axis=0)),
        spectral_centroid=float(centroid.mean()),
        spectral_bandwidth=float(bandwidth.mean()),
        zero_crossing_rate=float(zcr.mean()),
        rmse=float(rms.mean()),
    )
