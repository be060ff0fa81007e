"""Thirteen tactile features from a 5x5 recording.

Counts are normalised to [0, 1] by the ADC full scale; a scalar idle
baseline (median of every taxel over the first five frames) is subtracted
and negatives clamp to zero. "Force" features work on the per-frame taxel
sum, "pressure" features on individual taxels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ADC_MAX, TACTILE_FEATURES
from .errors import InsufficientDataError, ValidationError

BASELINE_FRAMES = 5


@dataclass(frozen=True)
class TactileFeatureConfig:
    activity_threshold: float = 0.05
    debounce_gap: int = 2

    def __post_init__(self):
        if not 0 < self.activity_threshold < 1:
            raise ValidationError("activity_threshold must lie in (0, 1)")
        if self.debounce_gap < 0:
            raise ValidationError("debounce_gap must be >= 0")


@dataclass(frozen=True)
class TouchEvent:
    start_frame: int
    end_frame: int  # inclusive
    duration_s: float


@dataclass(frozen=True)
class TactileFeatures:
    mean_pressure: float
    max_pressure: float
    pressure_variance: float
    pressure_gradient: float
    median_force: float
    iqr_force: float
    contact_area: float
    rate_of_pressure_change: float
    pressure_std: float
    num_touches: int
    max_touch_duration: float
    min_touch_duration: float
    mean_touch_duration: float

    def as_array(self):
        return np.array([getattr(self, n) for n in TACTILE_FEATURES], dtype=np.float64)

    def as_dict(self):
        return {n: getattr(self, n) for n in TACTILE_FEATURES}


def normalized_pressure(recording):
    p = recording.counts.astype(np.float64) / ADC_MAX
    if len(p) == 0:
        return p
    baseline = np.median(p[:BASELINE_FRAMES])
    return np.maximum(p - baseline, 0.0)


def _active_runs(active):
    if not active.any():
        return []
    padded = np.concatenate([[False], active, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def _events_from_pressure(p, timestamps_ms, rate_hz, cfg):
    active = (p > cfg.activity_threshold).reshape(len(p), -1).any(axis=1)
    merged = []
    for start, end in _active_runs(active):
        if merged and start - merged[-1][1] - 1 <= cfg.debounce_gap:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    return [TouchEvent(s, e, (timestamps_ms[e] - timestamps_ms[s]) / 1000.0 + 1.0 / rate_hz)
            for s, e in merged]


def detect_touch_events(recording, cfg=TactileFeatureConfig()):
    return _events_from_pressure(normalized_pressure(recording), recording.timestamp_ms,
                                 recording.nominal_rate_hz, cfg)


def _exact_mean(x):
    # correctly rounded, hence independent of taxel order
    x = np.ravel(x)
    return math.fsum(x.tolist()) / len(x)


def tactile_features(recording, cfg=TactileFeatureConfig()):
    if len(recording) < 2:
        raise InsufficientDataError("need at least 2 frames to form derivatives")
    p = normalized_pressure(recording)
    rate = recording.nominal_rate_hz
    flat = p.reshape(len(p), -1)
    force = np.array([math.fsum(row) for row in flat.tolist()])
    q25, q50, q75 = np.percentile(force, [25, 50, 75])
    events = _events_from_pressure(p, recording.timestamp_ms, rate, cfg)
    durations = np.array([e.duration_s for e in events])
    mean = _exact_mean(p)
    var = _exact_mean((p - mean) ** 2)
    return TactileFeatures(
        mean_pressure=mean,
        max_pressure=float(p.max()),
        pressure_variance=var,
        pressure_gradient=_exact_mean(np.abs(np.diff(p, axis=0))) * rate,
        median_force=float(q50),
        iqr_force=float(q75 - q25),
        contact_area=float((p > cfg.activity_threshold).sum(axis=(1, 2)).mean()),
        rate_of_pressure_change=float(np.abs(np.diff(force)).mean() * rate),
        pressure_std=math.sqrt(var),
        num_touches=len(events),
        max_touch_duration=float(durations.max()) if events else 0.0,
        min_touch_duration=float(durations.min()) if events else 0.0,
        mean_touch_duration=float(durations.mean()) if events else 0.0,
    )
