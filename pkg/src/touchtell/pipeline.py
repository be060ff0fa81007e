"""Per-trial feature extraction and the feature table that ties it to labels."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioFeatureConfig, audio_features
from .core import FEATURE_NAMES, labels_for, read_recording_csv, read_wav
from .decoders.selection import fuse_features
from .errors import DependencyError, ParseError, ShapeError
from .synth import SynthConfig, make_trial, participant_id, trial_specs
from .tactile import TactileFeatureConfig, tactile_features

KEY_COLUMNS = ("participant_id", "round", "task", "label")
TABLE_HEADER = KEY_COLUMNS + FEATURE_NAMES


@dataclass
class FeatureTable:
    participant_id: np.ndarray
    round: np.ndarray
    task: np.ndarray
    label: np.ndarray
    X: np.ndarray  # (N, 30) in FEATURE_NAMES order

    def __post_init__(self):
        self.participant_id = np.asarray(self.participant_id, dtype=object)
        self.round = np.asarray(self.round, dtype=np.int64)
        self.task = np.asarray(self.task, dtype=object)
        self.label = np.asarray(self.label, dtype=object)
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        n = len(self.X)
        if not all(len(a) == n for a in (self.participant_id, self.round, self.task,
                                         self.label)):
            raise ShapeError("feature table columns disagree in length")

    def __len__(self):
        return len(self.X)

    def subset(self, mask):
        mask = np.asarray(mask)
        return FeatureTable(self.participant_id[mask], self.round[mask], self.task[mask],
                            self.label[mask], self.X[mask])

    def for_task(self, task):
        return self.subset(self.task == task)

    def participants(self):
        return sorted(set(self.participant_id.tolist()))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for i in range(len(self)):
            w.writerow([self.participant_id[i], int(self.round[i]), self.task[i],
                        self.label[i], *(repr(float(v)) for v in self.X[i])])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != TABLE_HEADER:
            raise ParseError("feature header does not match the frozen feature order", line=1)
        pid, rnd, task, label, X = [], [], [], [], []
        for n, row in enumerate(rows[1:], start=2):
            if len(row) != len(TABLE_HEADER):
                raise ParseError(f"expected {len(TABLE_HEADER)} fields", line=n)
            try:
                X.append([float(v) for v in row[4:]])
                rnd.append(int(row[1]))
            except ValueError:
                raise ParseError("non-numeric value", line=n) from None
            pid.append(row[0])
            task.append(row[2])
            label.append(row[3])
        return cls(pid, rnd, task, label, np.array(X).reshape(-1, len(FEATURE_NAMES)))

    @classmethod
    def concat(cls, tables):
        tables = list(tables)
        return cls(np.concatenate([t.participant_id for t in tables]),
                   np.concatenate([t.round for t in tables]),
                   np.concatenate([t.task for t in tables]),
                   np.concatenate([t.label for t in tables]),
                   np.vstack([t.X for t in tables]))


def trial_features(recording, clip, tactile_cfg=TactileFeatureConfig(),
                   audio_cfg=AudioFeatureConfig()):
    """One fused 30-value vector for a (recording, clip) pair."""
    return fuse_features(tactile_features(recording, tactile_cfg).as_array(),
                         audio_features(clip, audio_cfg).as_array())


def _extract_record(args):
    manifest_root, trial = args
    root = Path(manifest_root) if manifest_root else None
    paths = [Path(p) if root is None or Path(p).is_absolute() else root / p
             for p in (trial.tactile_path, trial.audio_path)]
    for p in paths:
        if not p.exists():
            raise DependencyError(f"missing artifact {p} for trial "
                                  f"{trial.participant_id}/r{trial.round}/{trial.label}")
    return trial_features(read_recording_csv(paths[0]), read_wav(paths[1], validate=True))


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(a) for a in items]


def extract_manifest(manifest, jobs=1):
    """Read every trial's files and extract features, in manifest order."""
    trials = list(manifest.trials)
    root = str(manifest.root) if manifest.root is not None else None
    rows = _map(_extract_record, [(root, t) for t in trials], jobs)
    return FeatureTable([t.participant_id for t in trials], [t.round for t in trials],
                        [t.task for t in trials], [t.label for t in trials],
                        np.array(rows).reshape(-1, len(FEATURE_NAMES)))


def _generate_one(args):
    cfg, task, p, r, label = args
    trial = make_trial(cfg, task, p, r, label)
    return trial_features(trial.recording, trial.audio)


def generate_features(cfg=SynthConfig(), task="gesture", jobs=1):
    """Synthesize a task in memory and return its feature table.

    Produces exactly the values :func:`extract_manifest` gives on the files
    ``gen_dataset`` would write for the same configuration.
    """
    labels_for(task)
    specs = trial_specs(cfg, task)
    rows = _map(_generate_one, [(cfg, task, p, r, label) for p, r, label in specs], jobs)
    return FeatureTable([participant_id(p) for p, _, _ in specs], [r for _, r, _ in specs],
                        [task] * len(specs), [label for _, _, label in specs],
                        np.array(rows).reshape(-1, len(FEATURE_NAMES)))


def generate_study(cfg=SynthConfig(), jobs=1):
    """Both tasks, emotion first."""
    return FeatureTable.concat([generate_features(cfg, "emotion", jobs),
                                generate_features(cfg, "gesture", jobs)])


__all__ = ["FeatureTable", "KEY_COLUMNS", "TABLE_HEADER", "trial_features", "extract_manifest",
           "generate_features", "generate_study"]
