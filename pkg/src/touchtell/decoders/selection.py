"""Feature fusion, participant-grouped folds and grid search."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..core import AUDIO_FEATURES, TACTILE_FEATURES
from ..errors import ConfigurationError, ShapeError
from ..stats import zscore_apply, zscore_fit
from .models import train

N_TACTILE = len(TACTILE_FEATURES)
N_AUDIO = len(AUDIO_FEATURES)

MODALITY_COLUMNS = {
    "touch": slice(0, N_TACTILE),
    "sound": slice(N_TACTILE, N_TACTILE + N_AUDIO),
    "fused": slice(0, N_TACTILE + N_AUDIO),
}


def fuse_features(tactile, audio):
    t = np.asarray(tactile, dtype=np.float64)
    a = np.asarray(audio, dtype=np.float64)
    if t.shape[-1] != N_TACTILE or a.shape[-1] != N_AUDIO:
        raise ShapeError(f"expected {N_TACTILE} tactile and {N_AUDIO} audio values")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
        raise ShapeError("feature blocks must be finite")
    return np.concatenate([t, a], axis=-1)


def split_blocks(fused):
    v = np.asarray(fused)
    return v[..., :N_TACTILE], v[..., N_TACTILE:]


def select_modality(X, modality):
    try:
        return np.asarray(X)[:, MODALITY_COLUMNS[modality]]
    except KeyError:
        raise ValueError(f"unknown modality {modality!r}") from None


# ---------------------------------------------------------------------------
# folds


def grouped_stratified_folds(y, groups, k=10, seed=0):
    """Assign whole groups to k folds, balancing label counts greedily.

    Groups are visited largest first (ties in a seeded shuffled order); each
    goes to the fold that minimises the spread of per-label fold counts, then
    the smallest fold, then the lowest index. Returns a list of k arrays of
    row indices.
    """
    y = np.asarray(y)
    groups = np.asarray(groups)
    names = np.unique(groups)
    if len(names) < k:
        raise ConfigurationError(f"{len(names)} groups cannot fill {k} folds")
    labels = np.unique(y)
    lab_idx = np.searchsorted(labels, y)
    grp_idx = np.searchsorted(names, groups)
    per_group = np.zeros((len(names), len(labels)))
    np.add.at(per_group, (grp_idx, lab_idx), 1)

    rng = np.random.default_rng([seed, 29])
    shuffled = rng.permutation(len(names))
    sizes = per_group.sum(axis=1)
    visit = sorted(shuffled.tolist(), key=lambda g: -sizes[g])

    fold_counts = np.zeros((k, len(labels)))
    assignment = np.empty(len(names), dtype=np.int64)
    for g in visit:
        best, best_key = 0, None
        for f in range(k):
            trial = fold_counts.copy()
            trial[f] += per_group[g]
            key = (float(trial.std(axis=0).sum()), float(fold_counts[f].sum()), f)
            if best_key is None or key < best_key:
                best, best_key = f, key
        fold_counts[best] += per_group[g]
        assignment[g] = best
    row_fold = assignment[grp_idx]
    folds = [np.flatnonzero(row_fold == f) for f in range(k)]
    if any(len(f) == 0 for f in folds):
        raise ConfigurationError("a fold ended up empty")
    return folds


def assert_disjoint_groups(groups, train_idx, test_idx):
    """Leakage guard: no group may appear on both sides."""
    groups = np.asarray(groups)
    shared = set(groups[train_idx].tolist()) & set(groups[test_idx].tolist())
    if shared:
        raise AssertionError(f"participants on both sides of a split: {sorted(shared)}")


# ---------------------------------------------------------------------------
# grid search

DEFAULT_GRIDS = {
    "dt": {"max_depth": [3, 5, 8, 12, None]},
    "rf": {"n_estimators": [50, 100, 200], "max_depth": [5, 10, None]},
    "svm": {"C": [0.01, 0.1, 1, 10]},
}


@dataclass(frozen=True)
class GridSpec:
    params: dict  # name -> list of values

    def settings(self):
        names = list(self.params)
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.params[n] for n in names))]

    def __len__(self):
        return len(self.settings())

    @classmethod
    def default(cls, kind):
        return cls({k: list(v) for k, v in DEFAULT_GRIDS[kind].items()})

    @classmethod
    def load(cls, path, kind=None):
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        if kind is not None and kind in obj and isinstance(obj[kind], dict):
            obj = obj[kind]
        return cls(obj)


@dataclass
class CvReport:
    model_kind: str
    settings: list
    mean_accuracy: list
    std_accuracy: list
    fold_accuracy: list
    chosen: dict = field(default_factory=dict)

    def rows(self):
        for s, m, sd in zip(self.settings, self.mean_accuracy, self.std_accuracy):
            yield {"setting": json.dumps(s, sort_keys=True), "mean_accuracy": m,
                   "std_accuracy": sd, "chosen": s == self.chosen}


def fit_standardized(kind, X, y, params, seed, classes):
    """Z-score on X (the training rows) and train; returns (zmodel, model)."""
    zm = zscore_fit(X)
    return zm, train(kind, zscore_apply(zm, X), y, params, seed, classes)


def _forest_prefix_accuracies(settings, Xtr, ytr, Xva, yva, seed, classes):
    """Score every (n_estimators, depth) setting from the largest forest per depth.

    Valid because forests with the same seed are prefixes of each other.
    """
    out = {}
    by_rest = {}
    for i, s in enumerate(settings):
        rest = tuple(sorted((k, repr(v)) for k, v in s.items() if k != "n_estimators"))
        by_rest.setdefault(rest, []).append(i)
    for idxs in by_rest.values():
        big = max(settings[i].get("n_estimators", 100) for i in idxs)
        params = dict(settings[idxs[0]], n_estimators=big)
        zm, forest = fit_standardized("rf", Xtr, ytr, params, seed, classes)
        Zva = zscore_apply(zm, Xva)
        leaf = [t.leaf_values(Zva).argmax(axis=1) for t in forest.trees]
        cls = np.asarray(classes, dtype=object)
        for i in idxs:
            n = settings[i].get("n_estimators", 100)
            votes = np.zeros((len(Zva), len(classes)))
            for arg in leaf[:n]:
                votes[np.arange(len(Zva)), arg] += 1
            out[i] = float(np.mean(cls[votes.argmax(axis=1)] == yva))
    return [out[i] for i in range(len(settings))]


def grid_search_cv(model_kind, grid, X, y, groups, k=10, seed=0, classes=None):
    """Grouped k-fold grid search; z-scoring is fit inside each training fold."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=object)
    groups = np.asarray(groups)
    classes = list(np.unique(y)) if classes is None else list(classes)
    grid = grid if isinstance(grid, GridSpec) else GridSpec(grid)
    settings = grid.settings()
    if not settings:
        raise ConfigurationError("empty grid")
    folds = grouped_stratified_folds(y, groups, k, seed)
    all_idx = np.arange(len(y))
    scores = np.zeros((len(settings), k))
    for f, va in enumerate(folds):
        tr = np.setdiff1d(all_idx, va)
        assert_disjoint_groups(groups, tr, va)
        fold_seed = seed * 1000 + f
        if model_kind == "rf":
            scores[:, f] = _forest_prefix_accuracies(settings, X[tr], y[tr], X[va], y[va],
                                                     fold_seed, classes)
            continue
        for i, s in enumerate(settings):
            zm, model = fit_standardized(model_kind, X[tr], y[tr], s, fold_seed, classes)
            scores[i, f] = np.mean(model.predict(zscore_apply(zm, X[va])) == y[va])
    means = scores.mean(axis=1)
    best = int(np.flatnonzero(means == means.max())[0])
    return CvReport(model_kind, settings, means.tolist(), scores.std(axis=1).tolist(),
                    scores.tolist(), settings[best])
