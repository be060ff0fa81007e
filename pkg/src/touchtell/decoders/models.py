"""Decision tree, random forest and one-vs-rest linear SVM.

All trainers are pure functions of (X, y, params, seed). Forest trees get
per-tree seeds derived from (seed, tree index), so a forest of n trees is
the prefix of a larger forest grown with the same seed, and thread count
never changes the result.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDataError, ShapeError
from . import _kernels


def _prepare(X, y, classes):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError("X must be 2-D with one row per label")
    if len(y) < 2:
        raise DegenerateDataError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise ShapeError("training features must be finite")
    classes = list(np.unique(y)) if classes is None else list(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        codes = np.array([lookup[v] for v in y.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise ShapeError(f"label {exc.args[0]!r} not in classes") from None
    if len(np.unique(codes)) < 2:
        raise DegenerateDataError("training labels contain a single class")
    return X, codes, classes


def _depth_arg(max_depth):
    return -1 if max_depth is None else int(max_depth)


def _seed64(*words):
    return int(np.random.SeedSequence(list(words)).generate_state(1, np.uint64)[0])


def _check_dim(model, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got shape {X.shape}")
    return X


# ---------------------------------------------------------------------------
# trees


@dataclass
class TreeModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    classes: list
    n_features: int
    max_depth: int | None = None
    min_samples_split: int = 2

    @property
    def n_nodes(self):
        return len(self.feature)

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def leaf_values(self, X, max_depth=None):
        return _kernels.tree_leaf_values(_check_dim(self, X), self.feature, self.threshold,
                                         self.left, self.right, self.value,
                                         _depth_arg(max_depth))

    def predict_scores(self, X):
        return self.leaf_values(X)

    def predict(self, X):
        return np.asarray(self.classes, dtype=object)[self.predict_scores(X).argmax(axis=1)]

    def to_dict(self):
        return {
            "kind": "dt", "classes": [str(c) for c in self.classes],
            "n_features": self.n_features, "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "nodes": {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                      "left": self.left.tolist(), "right": self.right.tolist(),
                      "value": self.value.tolist()},
        }

    @classmethod
    def from_dict(cls, d):
        n = d["nodes"]
        return cls(np.array(n["feature"], np.int64), np.array(n["threshold"], np.float64),
                   np.array(n["left"], np.int64), np.array(n["right"], np.int64),
                   np.array(n["value"], np.float64).reshape(len(n["feature"]), -1),
                   list(d["classes"]), d["n_features"], d["max_depth"], d["min_samples_split"])


def _grow(X, codes, samples, n_classes, classes, max_depth, min_samples_split, max_features,
          seed):
    f, t, l, r, v, n_nodes = _kernels.grow_tree(
        X, codes, samples.astype(np.int64), n_classes, _depth_arg(max_depth),
        int(min_samples_split), int(max_features), np.uint64(seed))
    return TreeModel(f[:n_nodes].copy(), t[:n_nodes].copy(), l[:n_nodes].copy(),
                     r[:n_nodes].copy(), v[:n_nodes].copy(), classes, X.shape[1],
                     max_depth, min_samples_split)


def train_decision_tree(X, y, params=None, seed=0, classes=None):
    params = dict(params or {})
    X, codes, classes = _prepare(X, y, classes)
    return _grow(X, codes, np.arange(len(X)), len(classes), classes,
                 params.get("max_depth"), params.get("min_samples_split", 2),
                 X.shape[1], _seed64(seed))


@dataclass
class ForestModel:
    trees: list
    tree_seeds: list
    classes: list
    n_features: int
    max_features: int
    bootstrap: bool = True

    @property
    def n_estimators(self):
        return len(self.trees)

    def votes(self, X, n_trees=None, max_depth=None):
        X = _check_dim(self, X)
        trees = self.trees if n_trees is None else self.trees[:n_trees]
        counts = np.zeros((len(X), len(self.classes)))
        rows = np.arange(len(X))
        for tree in trees:
            counts[rows, tree.leaf_values(X, max_depth).argmax(axis=1)] += 1.0
        return counts

    def predict_scores(self, X):
        return self.votes(X) / self.n_estimators

    def predict(self, X):
        return np.asarray(self.classes, dtype=object)[self.votes(X).argmax(axis=1)]

    def to_dict(self):
        return {"kind": "rf", "classes": [str(c) for c in self.classes],
                "n_features": self.n_features, "max_features": self.max_features,
                "bootstrap": self.bootstrap, "tree_seeds": [str(s) for s in self.tree_seeds],
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls([TreeModel.from_dict(t) for t in d["trees"]],
                   [int(s) for s in d["tree_seeds"]], list(d["classes"]), d["n_features"],
                   d["max_features"], d["bootstrap"])


def train_random_forest(X, y, params=None, seed=0, classes=None, n_jobs=1):
    params = dict(params or {})
    X, codes, classes = _prepare(X, y, classes)
    n_estimators = int(params.get("n_estimators", 100))
    bootstrap = bool(params.get("bootstrap", True))
    max_features = int(params.get("max_features") or max(1, math.isqrt(X.shape[1])))
    seeds = [_seed64(seed, i) for i in range(n_estimators)]

    def one(i):
        if bootstrap:
            samples = np.random.default_rng([seed, i]).integers(0, len(X), len(X))
        else:
            samples = np.arange(len(X))
        return _grow(X, codes, samples, len(classes), classes, params.get("max_depth"),
                     params.get("min_samples_split", 2), max_features, seeds[i])

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = list(pool.map(one, range(n_estimators)))
    else:
        trees = [one(i) for i in range(n_estimators)]
    return ForestModel(trees, seeds, classes, X.shape[1], max_features, bootstrap)


# ---------------------------------------------------------------------------
# linear SVM


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray
    classes: list
    C: float
    epochs: int
    seed: int
    objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flags: list = field(default_factory=list)

    @property
    def n_features(self):
        return self.weights.shape[1]

    def predict_scores(self, X):
        return _check_dim(self, X) @ self.weights.T + self.bias

    def predict(self, X):
        return np.asarray(self.classes, dtype=object)[self.predict_scores(X).argmax(axis=1)]

    def to_dict(self):
        return {"kind": "svm", "classes": [str(c) for c in self.classes],
                "weights": self.weights.tolist(), "bias": self.bias.tolist(), "C": self.C,
                "epochs": self.epochs, "seed": self.seed, "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["weights"], np.float64), np.array(d["bias"], np.float64),
                   list(d["classes"]), d["C"], d["epochs"], d["seed"], flags=d["flags"])


def train_linear_svm(X, y, params=None, seed=0, classes=None):
    """One-vs-rest hinge loss, L2 penalty lambda = 1 / (C n), Pegasos steps.

    The bias is an appended constant feature and is regularised with the
    weights.
    """
    params = dict(params or {})
    X, codes, classes = _prepare(X, y, classes)
    C = float(params.get("C", 1.0))
    epochs = int(params.get("epochs", 60))
    flags = []
    if np.any(np.abs(X.std(axis=0) - 1.0) > 0.5):
        flags.append("input not standardized")
        warnings.warn("linear SVM input columns are not standardized", RuntimeWarning,
                      stacklevel=2)
    n = len(X)
    Xb = np.hstack([X, np.ones((n, 1))])
    rng = np.random.default_rng([seed, 17])
    order = np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    W, objective = _kernels.pegasos_ovr(Xb, codes, len(classes), 1.0 / (C * n), order, True)
    return LinearSvmModel(W[:, :-1].copy(), W[:, -1].copy(), classes, C, epochs, seed,
                          objective, flags)


# ---------------------------------------------------------------------------

TRAINERS = {"dt": train_decision_tree, "rf": train_random_forest, "svm": train_linear_svm}
_LOADERS = {"dt": TreeModel, "rf": ForestModel, "svm": LinearSvmModel}


def train(kind, X, y, params=None, seed=0, classes=None):
    try:
        trainer = TRAINERS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return trainer(X, y, params, seed, classes)


def predict(model, X):
    return model.predict(X)


def predict_scores(model, X):
    return model.predict_scores(X)


def save_model(model, path, metadata=None):
    payload = model.to_dict()
    if metadata:
        payload["metadata"] = metadata
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return _LOADERS[d["kind"]].from_dict(d)
