"""Domain types, label vocabularies and file I/O.

Recordings are stored column-wise (numpy arrays) rather than as lists of
frame objects; :class:`SensorFrame` is the per-frame view used by the wire
codec and the scanner.
"""

from __future__ import annotations

import csv
import io
import json
import os
import wave
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParseError, RangeError, ShapeError, ValidationError

GRID = 5
N_TAXELS = GRID * GRID
ADC_MAX = 4095
NOMINAL_RATE_HZ = 45.0
NOMINAL_DURATION_S = 10.0
SAMPLE_RATE_HZ = 44100
AUDIO_SAMPLES = 441000
AUDIO_TOLERANCE = 1024
SCHEMA_VERSION = 1

EMOTIONS = (
    "Anger", "Attention", "Calming", "Comfort", "Confusion",
    "Disgust", "Fear", "Happiness", "Sadness", "Surprise",
)
GESTURES = ("Hold", "Pat", "Poke", "Rub", "Tap", "Tickle")
TASKS = ("emotion", "gesture")

QUADRANTS = {
    "Q0": ("Attention",),
    "Q1": ("Happiness", "Surprise"),
    "Q2": ("Anger", "Fear", "Disgust"),
    "Q3": ("Sadness", "Confusion"),
    "Q4": ("Comfort", "Calming"),
}
EMOTION_QUADRANT = {e: q for q, members in QUADRANTS.items() for e in members}

TACTILE_FEATURES = (
    "mean_pressure", "max_pressure", "pressure_variance", "pressure_gradient",
    "median_force", "iqr_force", "contact_area", "rate_of_pressure_change",
    "pressure_std", "num_touches", "max_touch_duration", "min_touch_duration",
    "mean_touch_duration",
)
AUDIO_FEATURES = tuple(f"mfcc_{i}" for i in range(1, 14)) + (
    "spectral_centroid", "spectral_bandwidth", "zero_crossing_rate", "rmse",
)
# Frozen order: every producer and consumer of feature vectors uses this.
FEATURE_NAMES = TACTILE_FEATURES + AUDIO_FEATURES

TAXEL_COLUMNS = tuple(f"t{i}{j}" for i in range(GRID) for j in range(GRID))
CSV_HEADER = ("seq", "timestamp_ms") + TAXEL_COLUMNS
MANIFEST_FIELDS = ("participant_id", "round", "task", "label", "tactile_path", "audio_path")


def labels_for(task):
    if task == "emotion":
        return EMOTIONS
    if task == "gesture":
        return GESTURES
    raise ValueError(f"unknown task {task!r}")


def quadrant_of(emotion):
    return EMOTION_QUADRANT[emotion]


# ---------------------------------------------------------------------------
# Tactile recordings


@dataclass(frozen=True, eq=False)
class SensorFrame:
    seq: int
    timestamp_ms: int
    counts: np.ndarray  # (5, 5) integer ADC counts

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.size != N_TAXELS:
            raise ShapeError(f"expected {N_TAXELS} counts, got {counts.size}")
        counts = counts.reshape(GRID, GRID).astype(np.int64)
        if counts.min() < 0 or counts.max() > ADC_MAX:
            raise RangeError(f"count ∉ [0,{ADC_MAX}]")
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other):
        if not isinstance(other, SensorFrame):
            return NotImplemented
        return (self.seq == other.seq and self.timestamp_ms == other.timestamp_ms
                and np.array_equal(self.counts, other.counts))


class TouchRecording:
    """Ordered sequence of 5x5 frames.

    Construction checks shape and count range only. Temporal invariants
    (ordering, ~10 s duration, ~45 Hz) are checked by :meth:`validate`, so
    short synthetic recordings can still be built for unit work.
    """

    def __init__(self, seq, timestamp_ms, counts, nominal_rate_hz=NOMINAL_RATE_HZ,
                 duration_s=NOMINAL_DURATION_S):
        self.seq = np.asarray(seq, dtype=np.int64).reshape(-1)
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64).reshape(-1)
        counts = np.asarray(counts)
        if counts.size == 0:
            counts = counts.reshape(0, GRID, GRID)
        if counts.ndim == 2 and counts.shape[1] == N_TAXELS:
            counts = counts.reshape(-1, GRID, GRID)
        if counts.ndim != 3 or counts.shape[1:] != (GRID, GRID):
            raise ShapeError(f"counts must have shape (T, 5, 5), got {counts.shape}")
        if not (len(self.seq) == len(self.timestamp_ms) == counts.shape[0]):
            raise ShapeError("seq, timestamp_ms and counts disagree in length")
        if counts.size and (counts.min() < 0 or counts.max() > ADC_MAX):
            raise RangeError(f"count ∉ [0,{ADC_MAX}]")
        self.counts = counts.astype(np.int64)
        self.nominal_rate_hz = float(nominal_rate_hz)
        self.duration_s = float(duration_s)

    @classmethod
    def from_frames(cls, frames, **kw):
        frames = list(frames)
        if not frames:
            return cls([], [], np.zeros((0, GRID, GRID)), **kw)
        return cls([f.seq for f in frames], [f.timestamp_ms for f in frames],
                   np.stack([f.counts for f in frames]), **kw)

    def __len__(self):
        return len(self.seq)

    @property
    def frames(self):
        return [SensorFrame(int(s), int(t), c)
                for s, t, c in zip(self.seq, self.timestamp_ms, self.counts)]

    def __eq__(self, other):
        if not isinstance(other, TouchRecording):
            return NotImplemented
        return (np.array_equal(self.seq, other.seq)
                and np.array_equal(self.timestamp_ms, other.timestamp_ms)
                and np.array_equal(self.counts, other.counts))

    def __repr__(self):
        return f"TouchRecording(frames={len(self)}, span_ms={self.span_ms()})"

    def span_ms(self):
        if len(self) == 0:
            return 0
        return int(self.timestamp_ms[-1] - self.timestamp_ms[0])

    def violations(self):
        out = []
        if len(self) >= 2:
            if np.any(np.diff(self.timestamp_ms) <= 0):
                out.append("timestamps strictly increasing")
            if np.any(np.diff(self.seq) <= 0):
                out.append("seq strictly increasing")
        span_s = self.span_ms() / 1000.0
        if not 9.0 <= span_s <= 11.0:
            out.append("duration within [9.0, 11.0] s")
        expected = self.nominal_rate_hz * span_s
        if not 0.8 * expected <= len(self) <= 1.2 * expected or len(self) == 0:
            out.append("frame count within [0.8, 1.2] x nominal rate x duration")
        return out

    def validate(self):
        problems = self.violations()
        if problems:
            raise ValidationError("recording violates invariant: " + "; ".join(problems))
        return self


def write_recording_csv(recording, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    flat = recording.counts.reshape(len(recording), N_TAXELS)
    for s, t, row in zip(recording.seq, recording.timestamp_ms, flat):
        w.writerow([int(s), int(t), *row.tolist()])
    data = buf.getvalue().encode("utf-8")
    if path is None:
        return data
    Path(path).write_bytes(data)
    return data


def parse_recording_csv(text, validate=True):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", line=1)
    header = tuple(c.strip() for c in lines[0].split(","))
    if header != CSV_HEADER:
        raise ParseError("header must be seq,timestamp_ms,t00..t44", line=1)
    rows = np.empty((len(lines) - 1, 2 + N_TAXELS), dtype=np.int64)
    for k, line in enumerate(lines[1:]):
        cells = line.rstrip("\r").split(",")
        if len(cells) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(cells)}", line=k + 2)
        try:
            rows[k] = [int(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"non-integer field ({exc})", line=k + 2) from None
        counts = rows[k, 2:]
        if counts.min() < 0 or counts.max() > ADC_MAX:
            raise RangeError(f"line {k + 2}: count ∉ [0,{ADC_MAX}]")
    rec = TouchRecording(rows[:, 0], rows[:, 1], rows[:, 2:])
    if validate:
        if len(rec) >= 2:
            bad = np.flatnonzero(np.diff(rec.timestamp_ms) <= 0)
            if bad.size:
                raise ValidationError(
                    f"line {bad[0] + 3}: timestamps strictly increasing violated")
            bad = np.flatnonzero(np.diff(rec.seq) <= 0)
            if bad.size:
                raise ValidationError(f"line {bad[0] + 3}: seq strictly increasing violated")
        rec.validate()
    return rec


def read_recording_csv(path, validate=True):
    return parse_recording_csv(Path(path).read_text(encoding="utf-8"), validate=validate)


# ---------------------------------------------------------------------------
# Audio


@dataclass(eq=False)
class AudioClip:
    samples: np.ndarray  # int16 mono PCM
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1:
            raise ShapeError("audio must be mono (1-D samples)")
        if s.dtype != np.int16:
            if s.size and (s.min() < -32768 or s.max() > 32767):
                raise RangeError("sample outside signed 16-bit range")
            s = s.astype(np.int16)
        self.samples = s

    def __eq__(self, other):
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.samples, other.samples))

    def __len__(self):
        return len(self.samples)

    def as_float(self):
        return self.samples.astype(np.float64) / 32768.0

    @classmethod
    def from_float(cls, x, sample_rate_hz=SAMPLE_RATE_HZ):
        q = np.clip(np.round(np.asarray(x) * 32767.0), -32768, 32767).astype(np.int16)
        return cls(q, sample_rate_hz)

    def validate(self):
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise ValidationError(f"sample rate {self.sample_rate_hz} != {SAMPLE_RATE_HZ}")
        if abs(len(self.samples) - AUDIO_SAMPLES) > AUDIO_TOLERANCE:
            raise ValidationError(
                f"sample count {len(self.samples)} not within {AUDIO_SAMPLES} +/- {AUDIO_TOLERANCE}")
        return self


def write_wav(clip, path):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(clip.samples.astype("<i2").tobytes())


def read_wav(path, validate=False):
    try:
        w = wave.open(str(path), "rb")
    except wave.Error as exc:
        raise FormatError(f"not a PCM RIFF/WAVE file: {exc}") from None
    with w:
        if w.getnchannels() != 1:
            raise FormatError(f"expected mono, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise FormatError(f"expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        if w.getframerate() != SAMPLE_RATE_HZ:
            raise FormatError(f"expected {SAMPLE_RATE_HZ} Hz, got {w.getframerate()} Hz")
        raw = w.readframes(w.getnframes())
    clip = AudioClip(np.frombuffer(raw, dtype="<i2").astype(np.int16), SAMPLE_RATE_HZ)
    if validate:
        clip.validate()
    return clip


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class TrialRecord:
    participant_id: str
    round: int
    task: str
    label: str
    tactile_path: str
    audio_path: str

    def violations(self):
        out = []
        if self.round not in (1, 2, 3):
            out.append("round ∈ {1,2,3}")
        if self.task not in TASKS:
            out.append("task ∈ {emotion, gesture}")
        elif self.label not in labels_for(self.task):
            out.append(f"label {self.label!r} does not match task {self.task!r}")
        return out

    @property
    def key(self):
        return (self.task, self.participant_id, self.round, self.label)

    def to_json(self):
        return json.dumps({f: getattr(self, f) for f in MANIFEST_FIELDS})


@dataclass
class DatasetManifest:
    trials: list = field(default_factory=list)
    seed: int | None = None
    schema_version: int = SCHEMA_VERSION
    root: Path | None = None

    def resolve(self, p):
        p = Path(p)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p

    def participants(self):
        return sorted({t.participant_id for t in self.trials})

    def by_task(self, task):
        return DatasetManifest([t for t in self.trials if t.task == task], self.seed,
                               self.schema_version, self.root)


def write_manifest(manifest, path):
    path = Path(path)
    path.write_text("".join(t.to_json() + "\n" for t in manifest.trials), encoding="utf-8")
    meta = {"schema_version": manifest.schema_version, "seed": manifest.seed}
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def meta_path(manifest_path):
    manifest_path = Path(manifest_path)
    return manifest_path.with_name(manifest_path.stem + ".meta.json")


def read_manifest(path):
    path = Path(path)
    trials = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=n) from None
        if set(obj) != set(MANIFEST_FIELDS):
            raise ParseError(f"fields must be exactly {', '.join(MANIFEST_FIELDS)}", line=n)
        trials.append(TrialRecord(str(obj["participant_id"]), int(obj["round"]), obj["task"],
                                  obj["label"], obj["tactile_path"], obj["audio_path"]))
    seed, version = None, SCHEMA_VERSION
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
        seed, version = meta.get("seed"), meta.get("schema_version", SCHEMA_VERSION)
    return DatasetManifest(trials, seed, version, root=path.parent)


@dataclass
class ManifestReport:
    missing_files: list
    violations: list  # (trial index, message)
    label_counts: dict
    parse_errors: list

    @property
    def ok(self):
        return not (self.missing_files or self.violations or self.parse_errors)


def validate_manifest(manifest, deep=False):
    """Collect findings without raising. ``deep`` also parses every file."""
    missing, violations, parse_errors = [], [], []
    counts = Counter()
    seen = set()
    for i, t in enumerate(manifest.trials):
        counts[(t.task, t.label)] += 1
        for msg in t.violations():
            violations.append((i, msg))
        if t.key in seen:
            violations.append((i, "duplicate trial"))
        seen.add(t.key)
        for p in (t.tactile_path, t.audio_path):
            full = manifest.resolve(p)
            if not full.exists():
                missing.append(str(p))
            elif deep:
                try:
                    if str(p).endswith(".wav"):
                        read_wav(full, validate=True)
                    else:
                        read_recording_csv(full)
                except (ValueError, OSError) as exc:
                    parse_errors.append((str(p), str(exc)))
    label_counts = {label: n for (_, label), n in sorted(counts.items())}
    return ManifestReport(missing, violations, label_counts, parse_errors)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)
