"""Accuracy, macro-F1, and confusion matrices.

Convention for confusion matrices: rows are predicted labels, columns are
truth labels, and normalization is per truth column (each nonempty column
sums to 1).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    confusion: np.ndarray            # counts, [predicted, truth]
    normalized_confusion: np.ndarray  # per truth column; empty columns all zero
    n_samples: int
    empty_truth_classes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "n_samples": self.n_samples,
            "confusion": self.confusion.tolist(),
            "normalized_confusion": self.normalized_confusion.tolist(),
            "empty_truth_classes": list(self.empty_truth_classes),
        }


def _as_labels(predictions, truths, c: int):
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError("predictions and truths must be 1-d and the same length")
    if p.size == 0:
        raise ValueError("empty input")
    if c < 2:
        raise ValueError(f"need >= 2 classes, got {c}")
    for name, arr in (("prediction", p), ("truth", t)):
        if arr.min() < 0 or arr.max() >= c:
            raise ValueError(f"{name} labels must lie in [0, {c})")
    return p, t


def accuracy(predictions, truths) -> float:
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape or p.size == 0:
        raise ValueError("predictions and truths must be nonempty and the same length")
    return float(np.mean(p == t))


def macro_f1(predictions, truths, c: int) -> float:
    """Unweighted mean of per-class F1. A class with no predictions and no
    truths scores 0, not skipped."""
    p, t = _as_labels(predictions, truths, c)
    f1s = np.zeros(c, dtype=np.float64)
    for k in range(c):
        tp = float(np.sum((p == k) & (t == k)))
        fp = float(np.sum((p == k) & (t != k)))
        fn = float(np.sum((p != k) & (t == k)))
        denom = 2 * tp + fp + fn
        f1s[k] = 2 * tp / denom if denom > 0 else 0.0
    return float(f1s.mean())


def confusion(predictions, truths, c: int):
    """Counts matrix indexed [predicted, truth] plus its column-normalized
    form; returns (counts, normalized, empty_truth_classes)."""
    p, t = _as_labels(predictions, truths, c)
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (p, t), 1)
    col_sums = counts.sum(axis=0)
    normalized = np.zeros((c, c), dtype=np.float64)
    nonempty = col_sums > 0
    normalized[:, nonempty] = counts[:, nonempty] / col_sums[nonempty]
    empty = tuple(int(k) for k in np.flatnonzero(~nonempty))
    return counts, normalized, empty


def report(predictions, truths, c: int) -> MetricsReport:
    counts, normalized, empty = confusion(predictions, truths, c)
    return MetricsReport(
        accuracy=accuracy(predictions, truths),
        macro_f1=macro_f1(predictions, truths, c),
        confusion=counts,
        normalized_confusion=normalized,
        n_samples=int(counts.sum()),
        empty_truth_classes=empty,
    )


def write_report(rep: MetricsReport, json_path, counts_csv_path=None, normalized_csv_path=None):
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for path, matrix, cell in ((counts_csv_path, rep.confusion, lambda x: int(x)),
                               (normalized_csv_path, rep.normalized_confusion,
                                lambda x: repr(float(x)))):
        if path is None:
            continue
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in matrix:
                writer.writerow([cell(x) for x in row])
