"""Participant-disjoint evaluation, metrics and the modality comparison report."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import TASKS, labels_for
from .decoders.selection import (GridSpec, assert_disjoint_groups, fit_standardized,
                                 grid_search_cv, select_modality)
from .errors import ConfigurationError, DependencyError, VocabularyError
from .stats import t_test_one_sample, zscore_apply

MODALITIES = ("fused", "sound", "touch")
MODELS = ("dt", "rf", "svm")
MODALITY_TITLES = {"fused": "Multimodal feature fusion", "sound": "Sound model",
                   "touch": "Touch model"}


@dataclass(frozen=True)
class Split:
    train: tuple
    test: tuple
    seed: int

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise ConfigurationError("train and test participants overlap")

    def masks(self, participant_ids):
        pid = np.asarray(participant_ids, dtype=object)
        return np.isin(pid, list(self.train)), np.isin(pid, list(self.test))


def _participants_of(source):
    if hasattr(source, "participants"):
        return list(source.participants())
    return sorted(set(source))


def split_by_participant(source, n_train=22, seed=0):
    """Random participant sample for training; everyone else is test.

    ``source`` is a manifest, a feature table or an iterable of ids.
    """
    ids = _participants_of(source)
    if not 0 < n_train < len(ids):
        raise ConfigurationError(f"n_train must lie in [1, {len(ids) - 1}], got {n_train}")
    rng = np.random.default_rng([seed, 41])
    chosen = set(rng.choice(len(ids), n_train, replace=False).tolist())
    train = tuple(ids[i] for i in range(len(ids)) if i in chosen)
    test = tuple(ids[i] for i in range(len(ids)) if i not in chosen)
    return Split(train, test, seed)


def assert_split_disjoint(split, participant_ids):
    tr, te = split.masks(participant_ids)
    assert_disjoint_groups(np.asarray(participant_ids, dtype=object), np.flatnonzero(tr),
                           np.flatnonzero(te))


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows true, columns predicted
    labels: tuple

    def permuted(self, order):
        order = list(order)
        return ConfusionMatrix(self.counts[np.ix_(order, order)],
                               tuple(self.labels[i] for i in order))

    def __add__(self, other):
        if self.labels != other.labels:
            raise ConfigurationError("label orders differ")
        return ConfusionMatrix(self.counts + other.counts, self.labels)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\predicted", *self.labels])
        for lab, row in zip(self.labels, self.counts):
            w.writerow([lab, *(int(v) for v in row)])
        if path is not None:
            Path(path).write_text(buf.getvalue(), encoding="utf-8")
        return buf.getvalue()


def confusion_matrix(y_true, y_pred, label_order):
    label_order = tuple(label_order)
    if len(y_true) != len(y_pred):
        raise ConfigurationError("y_true and y_pred differ in length")
    index = {lab: i for i, lab in enumerate(label_order)}
    counts = np.zeros((len(label_order), len(label_order)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index or p not in index:
            raise VocabularyError(f"label {t if t not in index else p!r} not in label order")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts, label_order)


def _counts(cm):
    c = np.asarray(cm.counts if isinstance(cm, ConfusionMatrix) else cm, dtype=np.float64)
    if c.size == 0 or c.sum() == 0:
        raise ConfigurationError("confusion matrix is empty")
    return c


def accuracy(cm):
    c = _counts(cm)
    return float(np.trace(c) / c.sum())


def balanced_accuracy(cm):
    """Mean recall over classes with support; unsupported classes are skipped."""
    c = _counts(cm)
    support = c.sum(axis=1)
    if np.any(support == 0):
        warnings.warn("classes with zero support excluded from balanced accuracy",
                      RuntimeWarning, stacklevel=2)
    keep = support > 0
    return float(np.mean(np.diag(c)[keep] / support[keep]))


def per_class_balanced_accuracy(cm, cls):
    """(recall + specificity) / 2 for one class read one-vs-rest."""
    c = _counts(cm)
    i = list(cm.labels).index(cls) if isinstance(cm, ConfusionMatrix) else int(cls)
    tp = c[i, i]
    fn = c[i].sum() - tp
    fp = c[:, i].sum() - tp
    tn = c.sum() - tp - fn - fp
    if tp + fn == 0:
        raise ConfigurationError(f"class {cls!r} has zero support")
    spec = tn / (tn + fp) if tn + fp > 0 else 1.0
    return float((tp / (tp + fn) + spec) / 2)


def chance_test(accuracies, baseline, alternative="greater"):
    """One-sample t-test of per-run accuracies against a chance rate."""
    return t_test_one_sample(np.asarray(accuracies, dtype=np.float64), baseline, alternative)


# ---------------------------------------------------------------------------
# modality report


@dataclass
class CellResult:
    task: str
    modality: str
    model: str
    chosen: dict
    cv_accuracy: float
    accuracies: list
    balanced_accuracies: list
    confusion: ConfusionMatrix  # summed over training seeds

    @property
    def key(self):
        return (self.task, self.modality, self.model)

    @property
    def mean_accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def mean_balanced_accuracy(self):
        return float(np.mean(self.balanced_accuracies))

    def per_class(self):
        return {lab: per_class_balanced_accuracy(self.confusion, lab)
                for lab in self.confusion.labels if self.confusion.counts[
                    self.confusion.labels.index(lab)].sum() > 0}

    def to_dict(self):
        return {"task": self.task, "modality": self.modality, "model": self.model,
                "chosen": self.chosen, "cv_accuracy": self.cv_accuracy,
                "accuracies": self.accuracies, "balanced_accuracies": self.balanced_accuracies,
                "mean_accuracy": self.mean_accuracy,
                "mean_balanced_accuracy": self.mean_balanced_accuracy,
                "per_class_balanced_accuracy": self.per_class(),
                "labels": list(self.confusion.labels),
                "confusion": self.confusion.counts.tolist()}


@dataclass
class ModalityReport:
    split: Split
    seeds: list
    cells: dict = field(default_factory=dict)  # (task, modality, model) -> CellResult

    def cell(self, task, modality, model):
        return self.cells[(task, modality, model)]

    def accuracy_table(self):
        rows = []
        for key in sorted(self.cells):
            c = self.cells[key]
            rows.append({"task": c.task, "modality": c.modality, "model": c.model,
                         "row": MODALITY_TITLES[c.modality], "accuracy": c.mean_accuracy,
                         "accuracy_std": float(np.std(c.accuracies)),
                         "balanced_accuracy": c.mean_balanced_accuracy,
                         "cv_accuracy": c.cv_accuracy,
                         "chosen": json.dumps(c.chosen, sort_keys=True)})
        return rows

    def to_dict(self):
        return {"split": {"train": list(self.split.train), "test": list(self.split.test),
                          "seed": self.split.seed},
                "seeds": list(self.seeds),
                "cells": [self.cells[k].to_dict() for k in sorted(self.cells)]}

    def summary_lines(self):
        return [f"report task={c.task} modality={c.modality} model={c.model} "
                f"accuracy={c.mean_accuracy:.4f} balanced={c.mean_balanced_accuracy:.4f}"
                for c in (self.cells[k] for k in sorted(self.cells))]


def _one_cell(table, split, task, modality, model, seeds, grid, k, base_seed):
    labels = labels_for(task)
    t = table.for_task(task)
    if len(t) == 0:
        raise DependencyError(f"no features for task {task!r}")
    tr, te = split.masks(t.participant_id)
    assert_disjoint_groups(t.participant_id, np.flatnonzero(tr), np.flatnonzero(te))
    X = select_modality(t.X, modality)
    cv = grid_search_cv(model, grid, X[tr], t.label[tr], t.participant_id[tr], k=k,
                        seed=base_seed, classes=labels)
    accs, baccs, total = [], [], None
    for s in seeds:
        zm, fitted = fit_standardized(model, X[tr], t.label[tr], cv.chosen, s, labels)
        pred = fitted.predict(zscore_apply(zm, X[te]))
        cm = confusion_matrix(t.label[te], pred, labels)
        accs.append(accuracy(cm))
        baccs.append(balanced_accuracy(cm))
        total = cm if total is None else total + cm
    best = cv.settings.index(cv.chosen)
    return CellResult(task, modality, model, cv.chosen, cv.mean_accuracy[best], accs, baccs,
                      total)


def modality_report(table, split, models=MODELS, seeds=range(10), tasks=TASKS,
                    modalities=MODALITIES, grids=None, k=10, base_seed=0, jobs=1):
    """Grid search on the training participants, then refit per seed and test.

    The split and the CV folds are fixed; only the training seed varies.
    """
    seeds = list(seeds)
    grids = grids or {}
    jobs_list = [(task, modality, model) for task in tasks for modality in modalities
                 for model in models]

    def run(key):
        task, modality, model = key
        grid = grids.get(model) or GridSpec.default(model)
        return _one_cell(table, split, task, modality, model, seeds, grid, k, base_seed)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(run, jobs_list))
    else:
        results = [run(key) for key in jobs_list]
    return ModalityReport(split, seeds, {r.key: r for r in results})


# ---------------------------------------------------------------------------
# writers


def confusion_svg(cm, title=""):
    """Minimal SVG heatmap, row-normalised."""
    c = np.asarray(cm.counts, dtype=np.float64)
    norm = c / np.maximum(c.sum(axis=1, keepdims=True), 1)
    n = len(cm.labels)
    cell, left, top = 36, 90, 40
    w, h = left + n * cell + 10, top + n * cell + 90
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             f'font-family="sans-serif" font-size="10">',
             f'<text x="{left}" y="16" font-size="12">{title}</text>']
    for i in range(n):
        y = top + i * cell
        parts.append(f'<text x="{left - 4}" y="{y + cell / 2 + 3}" '
                     f'text-anchor="end">{cm.labels[i]}</text>')
        for j in range(n):
            x = left + j * cell
            shade = int(round(255 * (1 - norm[i, j])))
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="rgb({shade},{shade},255)" stroke="#999"/>')
            parts.append(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 3}" '
                         f'text-anchor="middle">{int(c[i, j])}</text>')
    for j in range(n):
        x = left + j * cell + cell / 2
        y = top + n * cell + 8
        parts.append(f'<text x="{x}" y="{y}" transform="rotate(60 {x} {y})">'
                     f'{cm.labels[j]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(report, out_dir, svg=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                                     + "\n", encoding="utf-8")
    rows = report.accuracy_table()
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})
    (out / "report.csv").write_text(buf.getvalue(), encoding="utf-8")
    cm_dir = out / "confusion"
    cm_dir.mkdir(exist_ok=True)
    for key, c in sorted(report.cells.items()):
        stem = "_".join(key)
        c.confusion.to_csv(cm_dir / f"{stem}.csv")
        if svg:
            (cm_dir / f"{stem}.svg").write_text(confusion_svg(c.confusion, stem),
                                                encoding="utf-8")
    return out
