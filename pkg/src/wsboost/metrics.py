"""Evaluation metrics: accuracy, macro/binary F1 and the confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datamodel import LabelSpace, ValidationError

# For binary tasks the positive class is label 2 by convention.
BINARY_POSITIVE = 2


@dataclass(frozen=True, eq=False)
class MetricsReport:
    accuracy: float
    macro_f1: float
    binary_f1: Optional[float]
    confusion: np.ndarray  # C x C, rows = gold, cols = predicted

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "binary_f1": self.binary_f1,
            "confusion": self.confusion.tolist(),
        }


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def compute_metrics(preds, gold, label_space: LabelSpace) -> MetricsReport:
    preds = np.asarray(preds, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if preds.shape != gold.shape:
        raise ValidationError("preds/gold length mismatch")
    label_space.check_labels(preds)
    label_space.check_labels(gold)
    c = label_space.num_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (gold - 1, preds - 1), 1)

    accuracy = float(np.trace(confusion) / confusion.sum())
    f1s = []
    for j in range(c):
        tp = confusion[j, j]
        fp = confusion[:, j].sum() - tp
        fn = confusion[j, :].sum() - tp
        f1s.append(_f1(tp, fp, fn))
    macro_f1 = float(np.mean(f1s))
    binary_f1 = float(f1s[BINARY_POSITIVE - 1]) if c == 2 else None
    return MetricsReport(accuracy, macro_f1, binary_f1, confusion)
