"""Small synthetic feature tables for tests that do not need the generator."""

import numpy as np

from touchtell.core import EMOTIONS, GESTURES
from touchtell.pipeline import FeatureTable


def toy_table(n_participants=12, rounds=3, seed=0, gesture_signal=1.5, emotion_signal=0.6):
    """Labels shift the touch block more than the sound block."""
    rng = np.random.default_rng(seed)
    pid, rnd, task, label, X = [], [], [], [], []
    for name, labels, signal in (("gesture", GESTURES, gesture_signal),
                                 ("emotion", EMOTIONS, emotion_signal)):
        centers = rng.normal(size=(len(labels), 30))
        centers[:, 13:] *= 0.4
        for p in range(n_participants):
            offset = rng.normal(0, 0.3, 30)
            for r in range(1, rounds + 1):
                for i, lab in enumerate(labels):
                    pid.append(f"P{p + 1:02d}")
                    rnd.append(r)
                    task.append(name)
                    label.append(lab)
                    X.append(signal * centers[i] + offset + rng.normal(size=30))
    return FeatureTable(pid, rnd, task, label, np.array(X))
