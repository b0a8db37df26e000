"""Confusion matrices and per-class precision, recall and F-measure.

Every 0/0 ratio is defined as 0, so a class that is never predicted (or
never present) scores 0 rather than NaN.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class MetricsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray          # (k, k), rows actual, columns predicted
    class_names: tuple[str, ...]

    def __post_init__(self):
        c = self.counts
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise MetricsError(f"confusion matrix must be square, got shape {c.shape}")
        if np.any(c < 0):
            raise MetricsError("confusion matrix has negative cells")
        if len(self.class_names) != c.shape[0]:
            raise MetricsError("class_names length does not match the matrix")

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts, self.class_names)


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f_measure: float


def build_confusion(actual: Sequence[int], predicted: Sequence[int],
                    classes: Sequence[int] | None = None,
                    class_names: Sequence[str] | None = None) -> ConfusionMatrix:
    """Count (actual, predicted) pairs.

    ``classes`` fixes the row/column order; by default it is the sorted union
    of labels seen in either list.
    """
    actual = np.asarray(actual).ravel()
    predicted = np.asarray(predicted).ravel()
    if len(actual) != len(predicted):
        raise MetricsError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    if len(actual) == 0:
        raise MetricsError("no samples to score")
    if classes is None:
        classes = sorted(set(actual.tolist()) | set(predicted.tolist()))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    counts = np.zeros((k, k), dtype=np.int64)
    for a, p in zip(actual.tolist(), predicted.tolist()):
        try:
            counts[index[a], index[p]] += 1
        except KeyError as exc:
            raise MetricsError(f"label {exc.args[0]} is not among classes {list(classes)}") from None
    names = tuple(class_names) if class_names is not None else tuple(str(c) for c in classes)
    return ConfusionMatrix(counts, names)


def one_vs_rest_counts(cm: ConfusionMatrix, c: int) -> BinaryCounts:
    if not 0 <= c < cm.k:
        raise MetricsError(f"class index {c} out of range for k={cm.k}")
    counts = cm.counts
    tp = int(counts[c, c])
    fn = int(counts[c].sum()) - tp
    fp = int(counts[:, c].sum()) - tp
    return BinaryCounts(tp=tp, fp=fp, fn=fn, tn=cm.total - tp - fn - fp)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision(counts: BinaryCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fp)


def recall(counts: BinaryCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fn)


def f_measure(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def binary_accuracy(counts: BinaryCounts) -> float:
    return _ratio(counts.tp + counts.tn, counts.total)


def overall_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise MetricsError("empty confusion matrix")
    return int(np.trace(cm.counts)) / cm.total


def class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    out = []
    for c in range(cm.k):
        counts = one_vs_rest_counts(cm, c)
        p, r = precision(counts), recall(counts)
        out.append(ClassMetrics(precision=p, recall=r, f_measure=f_measure(p, r)))
    return out


def micro_recall(cm: ConfusionMatrix) -> float:
    per_class = [one_vs_rest_counts(cm, c) for c in range(cm.k)]
    tp = sum(b.tp for b in per_class)
    return _ratio(tp, tp + sum(b.fn for b in per_class))


def pct(value: float) -> str:
    """Render a fraction as a percentage with three decimals: 0.6186 -> '61.860'."""
    return f"{100.0 * value:.3f}"


def confusion_csv(cm: ConfusionMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["actual\\predicted", *cm.class_names])
    for name, row in zip(cm.class_names, cm.counts):
        writer.writerow([name, *(int(v) for v in row)])
    return buf.getvalue()
