"""Accuracy, macro-F1, per-class scores and the confusion matrix.

Counted by hand from the confusion matrix so the numbers are independent of
any ML library. All reported values are percentages in [0, 100]; a class the
model never predicts (or that never occurs) contributes zero precision,
recall and F1 rather than a division error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class: list  # [{"label", "precision", "recall", "f1", "support"}]
    confusion: np.ndarray  # rows true, cols predicted
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "confusion": self.confusion.tolist(),
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            accuracy=float(d["accuracy"]),
            macro_f1=float(d["macro_f1"]),
            per_class=list(d["per_class"]),
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            n=int(d["n"]),
        )


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def evaluate_predictions(y_true, y_pred, n_classes: int) -> MetricsReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise InvalidInputError("cannot score an empty split")
    if y_true.shape != y_pred.shape:
        raise InvalidInputError(
            f"shape mismatch: {y_true.shape} labels vs {y_pred.shape} predictions"
        )
    if y_true.min() < 0 or y_true.max() >= n_classes or y_pred.min() < 0 or y_pred.max() >= n_classes:
        raise InvalidInputError(f"labels outside [0, {n_classes})")

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[t, p] += 1

    per_class = []
    f1s = []
    for k in range(n_classes):
        tp = confusion[k, k]
        precision = _ratio(tp, confusion[:, k].sum())
        recall = _ratio(tp, confusion[k, :].sum())
        f1 = _ratio(2 * precision * recall, precision + recall)
        f1s.append(f1)
        per_class.append(
            {
                "label": k,
                "precision": 100.0 * precision,
                "recall": 100.0 * recall,
                "f1": 100.0 * f1,
                "support": int(confusion[k, :].sum()),
            }
        )

    return MetricsReport(
        accuracy=100.0 * float(np.trace(confusion)) / y_true.size,
        macro_f1=100.0 * float(np.mean(f1s)),
        per_class=per_class,
        confusion=confusion,
        n=int(y_true.size),
    )
