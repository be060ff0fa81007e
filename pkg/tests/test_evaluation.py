import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import toy_table
from oracles import recall_oracle
from touchtell.errors import ConfigurationError, DependencyError, VocabularyError
from touchtell.evaluation import (Split, accuracy, assert_split_disjoint, balanced_accuracy,
                                  chance_test, confusion_matrix, modality_report,
                                  per_class_balanced_accuracy, split_by_participant,
                                  write_report)

IDS = [f"P{i:02d}" for i in range(1, 29)]
SMALL_GRIDS = {"dt": {"max_depth": [3, None]}, "rf": {"n_estimators": [10], "max_depth": [5]},
               "svm": {"C": [0.1, 1.0]}}


# splits -----------------------------------------------------------------------

def test_default_split_sizes_and_determinism():
    s = split_by_participant(IDS, 22, seed=3)
    assert len(s.train) == 22 and len(s.test) == 6
    assert set(s.train) | set(s.test) == set(IDS) and not set(s.train) & set(s.test)
    assert s == split_by_participant(IDS, 22, seed=3)
    assert s != split_by_participant(IDS, 22, seed=4)


def test_split_errors():
    with pytest.raises(ConfigurationError):
        split_by_participant(IDS, 28)
    with pytest.raises(ConfigurationError):
        Split(("P01", "P02"), ("P02",), 0)


def test_trial_sets_disjoint_and_corrupted_split_caught():
    table = toy_table(8)
    s = split_by_participant(table, 6, seed=1)
    tr, te = s.masks(table.participant_id)
    assert not np.any(tr & te) and np.all(tr | te)
    assert_split_disjoint(s, table.participant_id)
    # bypass the constructor check to emulate a corrupted split
    bad = object.__new__(Split)
    object.__setattr__(bad, "train", s.train)
    object.__setattr__(bad, "test", s.test + (s.train[0],))
    object.__setattr__(bad, "seed", 1)
    with pytest.raises(AssertionError):
        assert_split_disjoint(bad, table.participant_id)


# metrics ----------------------------------------------------------------------

def test_confusion_hand_cases():
    cm = confusion_matrix(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
    assert cm.counts.tolist() == [[1, 1], [0, 1]]
    perfect = confusion_matrix(list("abcab"), list("abcab"), "abc")
    assert np.count_nonzero(perfect.counts - np.diag(np.diag(perfect.counts))) == 0
    assert accuracy(perfect) == balanced_accuracy(perfect) == 1.0
    assert all(per_class_balanced_accuracy(perfect, c) == 1.0 for c in "abc")
    with pytest.raises(VocabularyError):
        confusion_matrix(["A"], ["Z"], ["A", "B"])


def test_metric_hand_values():
    counts = np.array([[1, 1], [0, 2]])
    assert accuracy(counts) == 0.75
    assert balanced_accuracy(counts) == 0.75


def test_zero_support_class_is_flagged():
    with pytest.warns(RuntimeWarning):
        assert balanced_accuracy(np.array([[2, 0], [0, 0]])) == 1.0


def test_balanced_accuracy_matches_recall_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        counts = rng.integers(0, 20, (10, 10))
        assert balanced_accuracy(counts) == pytest.approx(recall_oracle(counts.tolist()),
                                                          abs=1e-12)


def test_per_class_balanced_accuracy_by_hand():
    cm = confusion_matrix(list("aaabbc"), list("aabbcc"), "abc")
    # class a: recall 2/3; specificity 3/3
    assert per_class_balanced_accuracy(cm, "a") == pytest.approx((2 / 3 + 1) / 2)
    # class b: recall 1/2; negatives a,a,a,c -> one a predicted b -> spec 3/4
    assert per_class_balanced_accuracy(cm, "b") == pytest.approx((0.5 + 0.75) / 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_metrics_invariant_to_label_permutation(seed):
    rng = np.random.default_rng(seed)
    labels = list("abcdef")
    y = rng.choice(labels, 60)
    p = np.where(rng.random(60) < 0.5, y, rng.choice(labels, 60))
    cm = confusion_matrix(y, p, labels)
    order = rng.permutation(6)
    other = cm.permuted(order)
    assert other.counts.sum() == 60
    assert accuracy(other) == accuracy(cm)
    assert balanced_accuracy(other) == pytest.approx(balanced_accuracy(cm), abs=1e-15)
    shuffled = confusion_matrix(y, p, [labels[i] for i in order])
    assert np.array_equal(shuffled.counts, other.counts)


def test_chance_test_direction():
    t, df, p = chance_test([0.30, 0.34, 0.36, 0.31, 0.33], 0.375)
    assert t < 0 and df == 4 and p > 0.95


# report -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_report():
    table = toy_table(12, seed=2)
    split = split_by_participant(table, 9, seed=0)
    return table, split, modality_report(table, split, seeds=[0, 1], grids=SMALL_GRIDS, k=3)


def test_report_has_eighteen_cells(small_report):
    _, _, rep = small_report
    assert len(rep.cells) == 18
    for c in rep.cells.values():
        assert all(0 <= a <= 1 for a in c.accuracies + c.balanced_accuracies)
        # 3 test participants x 3 rounds x labels, summed over 2 seeds
        assert c.confusion.counts.sum() == 2 * 9 * (10 if c.task == "emotion" else 6)


def test_report_is_deterministic(small_report):
    table, split, rep = small_report
    again = modality_report(table, split, seeds=[0, 1], grids=SMALL_GRIDS, k=3, jobs=4)
    assert again.to_dict() == rep.to_dict()


def test_report_orders_toy_tasks(small_report):
    _, _, rep = small_report
    assert (rep.cell("gesture", "fused", "svm").mean_accuracy
            > rep.cell("emotion", "fused", "svm").mean_accuracy)


def test_report_writers(tmp_path, small_report):
    _, _, rep = small_report
    write_report(rep, tmp_path, svg=True)
    data = json.loads((tmp_path / "report.json").read_text())
    assert len(data["cells"]) == 18
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert len(lines) == 19 and lines[0].startswith("task,modality,model,row,accuracy")
    assert len(list((tmp_path / "confusion").glob("*.csv"))) == 18
    assert (tmp_path / "confusion" / "emotion_fused_svm.svg").read_text().startswith("<svg")


def test_report_missing_task_is_dependency_error():
    table = toy_table(6).for_task("gesture")
    split = split_by_participant(table, 4, seed=0)
    with pytest.raises(DependencyError):
        modality_report(table, split, models=["dt"], tasks=["emotion"], seeds=[0],
                        grids=SMALL_GRIDS, k=3)
