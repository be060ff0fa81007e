"""Standardisation, PCA, ICC(C,1), PERMANOVA, Holm, Shapiro-Wilk, t-test."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (ConfigurationError, DegenerateDataError, DomainError, ShapeError,
                     SizeError)


# ---------------------------------------------------------------------------
# z-scoring


@dataclass(frozen=True)
class ZscoreModel:
    mean: np.ndarray
    std: np.ndarray  # population std

    @property
    def zero_variance(self):
        return self.std == 0


def zscore_fit(matrix):
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError("z-score fit needs a 2-D matrix with at least 2 rows")
    model = ZscoreModel(X.mean(axis=0), X.std(axis=0))
    if model.zero_variance.any():
        warnings.warn(f"{int(model.zero_variance.sum())} zero-variance column(s) map to 0",
                      RuntimeWarning, stacklevel=2)
    return model


def zscore_apply(model, matrix):
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.mean):
        raise ShapeError(f"expected {len(model.mean)} columns, got {X.shape}")
    scale = np.where(model.zero_variance, 1.0, model.std)
    Z = (X - model.mean) / scale
    Z[:, model.zero_variance] = 0.0
    return Z


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    loadings: np.ndarray  # (d, d) columns are components
    eigenvalues: np.ndarray  # descending
    retained: int

    @property
    def explained_ratio(self):
        total = self.eigenvalues.sum()
        return self.eigenvalues / total if total > 0 else np.zeros_like(self.eigenvalues)


def pca_fit(matrix, variance_target=0.95):
    """Eigendecomposition of the population covariance.

    Each loading vector is signed so its largest-magnitude entry is positive.
    ``retained`` is the smallest count reaching ``variance_target``.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError("PCA needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise DomainError("PCA input must be finite")
    mean = X.mean(axis=0)
    cov = np.cov(X - mean, rowvar=False, ddof=0).reshape(X.shape[1], X.shape[1])
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    total = vals.sum()
    if total > 0:
        cum = np.cumsum(vals) / total
        retained = int(np.searchsorted(cum, variance_target - 1e-12) + 1)
    else:
        retained = 1
    return PcaModel(mean, vecs, vals, min(retained, len(vals)))


def pca_transform(model, matrix, n_components=None):
    X = np.asarray(matrix, dtype=np.float64)
    k = model.loadings.shape[1] if n_components is None else n_components
    return (X - model.mean) @ model.loadings[:, :k]


# ---------------------------------------------------------------------------
# ICC


@dataclass(frozen=True)
class IccResult:
    icc: float
    ms_rows: float
    ms_error: float
    f: float
    df1: int
    df2: int
    p: float
    n: int
    k: int


def icc_consistency(matrix):
    """ICC(C,1): two-way model, consistency, single measurement.

    Rows are targets, columns are raters; column offsets do not count
    against agreement.
    """
    Y = np.asarray(matrix, dtype=np.float64)
    if Y.ndim != 2:
        raise ShapeError("ICC needs a 2-D targets x raters matrix")
    n, k = Y.shape
    if n < 2 or k < 2:
        raise SizeError("ICC needs at least 2 targets and 2 raters")
    if not np.all(np.isfinite(Y)):
        raise DomainError("ICC input has missing or non-finite cells")
    grand = Y.mean()
    ss_rows = k * ((Y.mean(axis=1) - grand) ** 2).sum()
    ss_cols = n * ((Y.mean(axis=0) - grand) ** 2).sum()
    ss_err = max(((Y - grand) ** 2).sum() - ss_rows - ss_cols, 0.0)
    df1, df2 = n - 1, (n - 1) * (k - 1)
    ms_rows, ms_err = ss_rows / df1, ss_err / df2
    scale = max(abs(ms_rows), abs(grand), 1.0)
    if ms_rows <= 1e-14 * scale and ms_err <= 1e-14 * scale:
        raise DegenerateDataError("no variation between targets or in residuals")
    icc = (ms_rows - ms_err) / (ms_rows + (k - 1) * ms_err)
    if ms_err == 0:
        f, p = math.inf, 0.0
    else:
        f = ms_rows / ms_err
        p = float(special.fdtrc(df1, df2, f))
    return IccResult(float(icc), float(ms_rows), float(ms_err), float(f), df1, df2,
                     min(max(p, 0.0), 1.0), n, k)


# ---------------------------------------------------------------------------
# PERMANOVA


@dataclass(frozen=True)
class PermanovaResult:
    pseudo_f: float
    p: float
    n_permutations: int
    group_sizes: dict


def _encode_groups(groups):
    groups = np.asarray(groups)
    names, codes = np.unique(groups, return_inverse=True)
    return names, codes.reshape(-1)


def _pseudo_f_batch(d2, codes_batch, n_groups, ss_total):
    """Pseudo-F for each row of ``codes_batch`` (B, N)."""
    B, N = codes_batch.shape
    onehot = np.zeros((B, N, n_groups))
    onehot[np.arange(B)[:, None], np.arange(N)[None, :], codes_batch] = 1.0
    sizes = onehot.sum(axis=1)  # (B, g)
    within = np.einsum("bng,nm,bmg->bg", onehot, d2, onehot, optimize=True) / 2.0
    ss_within = (within / sizes).sum(axis=1)
    ss_between = ss_total - ss_within
    return (ss_between / (n_groups - 1)) / (ss_within / (N - n_groups))


def squared_distances(X, block=64):
    """Euclidean d^2 from explicit differences, so d2[i, j] depends only on
    rows i and j (not on their position in X)."""
    N = len(X)
    d2 = np.empty((N, N))
    for i in range(0, N, block):
        d2[i:i + block] = ((X[i:i + block, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    return d2


def _observed_pseudo_f(d2, codes, n_groups, ss_total):
    # exactly rounded sums: invariant to row order and to group naming
    N = len(codes)
    ss_within = math.fsum(math.fsum(d2[np.ix_(codes == g, codes == g)].ravel().tolist())
                          / 2.0 / np.count_nonzero(codes == g) for g in range(n_groups))
    return ((ss_total - ss_within) / (n_groups - 1)) / (ss_within / (N - n_groups))


def permanova(features, groups, n_permutations=999, seed=0, batch=128):
    """One-way PERMANOVA on Euclidean distances.

    p = (1 + #{F_perm >= F_obs}) / (1 + n_permutations). Permutation batches
    draw from ``default_rng([seed, batch_index])`` so the sequence does not
    depend on how batches are scheduled.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    names, codes = _encode_groups(groups)
    if len(codes) != len(X):
        raise ShapeError("features and groups disagree in length")
    sizes = np.bincount(codes, minlength=len(names))
    if len(names) < 2:
        raise ConfigurationError("PERMANOVA needs at least 2 groups")
    if sizes.min() < 2:
        raise ConfigurationError("every group needs at least 2 members")
    if n_permutations < 99:
        raise ConfigurationError("n_permutations must be >= 99")
    N = len(X)
    d2 = squared_distances(X)
    ss_total = math.fsum(d2.ravel().tolist()) / 2.0 / N
    f_obs = _observed_pseudo_f(d2, codes, len(names), ss_total)
    hits = 0
    tol = 1e-9 * max(abs(f_obs), 1.0)
    for b, start in enumerate(range(0, n_permutations, batch)):
        m = min(batch, n_permutations - start)
        rng = np.random.default_rng([seed, b])
        perms = rng.permuted(np.tile(codes, (m, 1)), axis=1)
        f_perm = _pseudo_f_batch(d2, perms, len(names), ss_total)
        hits += int(np.count_nonzero(f_perm >= f_obs - tol))
    p = (1 + hits) / (1 + n_permutations)
    return PermanovaResult(float(f_obs), float(p), n_permutations,
                           {str(n): int(s) for n, s in zip(names, sizes)})


def holm_adjust(pvalues):
    p = np.asarray(pvalues, dtype=np.float64).reshape(-1)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise DomainError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="stable")
    stepped = np.maximum.accumulate(p[order] * (m - np.arange(m)))
    out = np.empty(m)
    out[order] = np.minimum(stepped, 1.0)
    return out.tolist()


@dataclass(frozen=True)
class PairwiseRow:
    group_a: str
    group_b: str
    pseudo_f: float
    p_raw: float
    p_adjusted: float


def pairwise_permanova_holm(features, groups, n_permutations=999, seed=0):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    groups = np.asarray(groups)
    names = np.unique(groups)
    results = []
    for a, b in itertools.combinations(names, 2):
        mask = (groups == a) | (groups == b)
        results.append((a, b, permanova(X[mask], groups[mask], n_permutations, seed)))
    adjusted = holm_adjust([r.p for _, _, r in results]) if results else []
    return [PairwiseRow(str(a), str(b), r.pseudo_f, r.p, adj)
            for (a, b, r), adj in zip(results, adjusted)]


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston 1995, algorithm AS R94)

_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coef, x):
    return sum(c * x ** i for i, c in enumerate(coef))


def _sw_coefficients(n):
    """Antisymmetric weights for the lower half of the order statistics."""
    half = n // 2
    if n == 3:
        return np.array([math.sqrt(0.5)])
    m = special.ndtri((np.arange(1, half + 1) - 0.375) / (n + 0.25))  # negative
    summ2 = 2.0 * (m ** 2).sum()
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a1 = _poly(_C1, rsn) - m[0] / ssumm2
    a = -m.copy()
    if n > 5:
        a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
        fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1 ** 2 - 2 * a2 ** 2))
        a = a / fac
        a[0], a[1] = a1, a2
    else:
        fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1 ** 2))
        a = a / fac
        a[0] = a1
    return a


def shapiro_wilk(x):
    """Return (W, p) for the Shapiro-Wilk normality test."""
    x = np.sort(np.asarray(x, dtype=np.float64).reshape(-1))
    n = len(x)
    if not 3 <= n <= 5000:
        raise SizeError("Shapiro-Wilk needs 3 <= n <= 5000")
    if x[-1] - x[0] <= 1e-19 * max(abs(x[0]), abs(x[-1]), 1.0):
        raise DegenerateDataError("all values are equal")
    a = _sw_coefficients(n)
    half = len(a)
    numer = (a * (x[::-1][:half] - x[:half])).sum() ** 2
    w = min(numer / ((x - x.mean()) ** 2).sum(), 1.0)
    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, min(max(p, 0.0), 1.0)
    w1 = math.log1p(-w) if w < 1 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if w1 >= gamma:
            return w, 1e-99
        y = -math.log(gamma - w1)
        mu, sigma = _poly(_C3, n), math.exp(_poly(_C4, n))
    else:
        lnn = math.log(n)
        y = w1
        mu, sigma = _poly(_C5, lnn), math.exp(_poly(_C6, lnn))
    p = float(special.ndtr(-(y - mu) / sigma))
    return w, min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# one-sample t-test


def t_test_one_sample(x, mu=0.0, alternative="two_sided"):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = len(x)
    if n < 2:
        raise SizeError("t-test needs n >= 2")
    s = x.std(ddof=1)
    if s == 0:
        raise DegenerateDataError("zero sample variance")
    df = n - 1
    t = (x.mean() - mu) / (s / math.sqrt(n))
    if alternative == "greater":
        p = special.stdtr(df, -t)
    elif alternative == "less":
        p = special.stdtr(df, t)
    elif alternative == "two_sided":
        p = 2.0 * special.stdtr(df, -abs(t))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return float(t), df, float(min(max(p, 0.0), 1.0))
