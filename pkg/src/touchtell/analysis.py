"""Study-level consistency (ICC) and variability (PERMANOVA) tables."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import labels_for
from .errors import DependencyError
from .stats import (icc_consistency, pairwise_permanova_holm, pca_fit, pca_transform,
                    permanova, zscore_apply, zscore_fit)


@dataclass(frozen=True)
class IccRow:
    label: str
    icc: float
    f: float
    df1: int
    df2: int
    p: float
    n: int
    k: int


def pc_scores(X, n_components=1):
    """Z-score the whole matrix, fit PCA and return the leading scores."""
    Z = zscore_apply(zscore_fit(X), X)
    model = pca_fit(Z)
    k = model.retained if n_components is None else n_components
    return pca_transform(model, Z, k), model


def round_matrix(scores, participant_id, rounds):
    """Rounds x participants matrix of one score column."""
    pids = sorted(set(np.asarray(participant_id).tolist()))
    rnds = sorted(set(np.asarray(rounds).tolist()))
    M = np.full((len(rnds), len(pids)), np.nan)
    col = {p: j for j, p in enumerate(pids)}
    row = {r: i for i, r in enumerate(rnds)}
    for s, p, r in zip(scores, participant_id, rounds):
        M[row[r], col[p]] = s
    if np.isnan(M).any():
        raise DependencyError("missing trials: every participant needs every round")
    return M


def icc_table(table, task, n_components=1):
    """One ICC(C,1) per label on PC scores, rows = rounds, columns = participants.

    With ``n_components`` > 1 (or None for the retained count) the ICC is
    averaged across components, weighting each equally.
    """
    t = table.for_task(task)
    if len(t) == 0:
        raise DependencyError(f"no features for task {task!r}")
    scores, _ = pc_scores(t.X, n_components)
    rows = []
    for label in labels_for(task):
        m = t.label == label
        results = [icc_consistency(round_matrix(scores[m, c], t.participant_id[m], t.round[m]))
                   for c in range(scores.shape[1])]
        r0 = results[0]
        rows.append(IccRow(label, float(np.mean([r.icc for r in results])), r0.f, r0.df1,
                           r0.df2, r0.p, r0.n, r0.k))
    return rows


def permanova_tables(table, task, n_permutations=999, seed=0):
    """Overall PERMANOVA on z-scored features plus Holm-adjusted pairwise rows."""
    t = table.for_task(task)
    if len(t) == 0:
        raise DependencyError(f"no features for task {task!r}")
    Z = zscore_apply(zscore_fit(t.X), t.X)
    overall = permanova(Z, t.label, n_permutations, seed)
    return overall, pairwise_permanova_holm(Z, t.label, n_permutations, seed)


def rows_to_csv(rows, path=None, float_fmt="{:.6g}"):
    rows = [asdict(r) if not isinstance(r, dict) else r for r in rows]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: float_fmt.format(v) if isinstance(v, float) else v
                    for k, v in r.items()})
    if path is not None:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return buf.getvalue()
