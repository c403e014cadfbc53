from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from temppnet.errors import DataValidationError

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True, slots=True)
class MetricsRow:
    """Precision, recall and F1 on the positive class; std fields are over runs."""

    precision: float
    recall: float
    f1: float
    precision_std: float = 0.0
    recall_std: float = 0.0
    f1_std: float = 0.0
    n_runs: int = 1

    def to_dict(self) -> dict[str, float | int]:
        return asdict(self)


def f1_score(precision: float, recall: float) -> float:
    total = precision + recall
    return 2.0 * precision * recall / total if total > 0 else 0.0


def confusion_counts(
    predictions: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with class 1 predicted when probability > 0.5."""

    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if p.size == 0:
        raise DataValidationError("metrics need at least one prediction")
    if p.shape != y.shape:
        raise DataValidationError(f"{p.size} predictions but {y.size} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise DataValidationError("labels must be 0 or 1")
    pred = p > DECISION_THRESHOLD
    pos = y == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    return tp, fp, fn, tn


def compute_metrics(
    predictions: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> MetricsRow:
    tp, fp, fn, _ = confusion_counts(predictions, labels)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return MetricsRow(precision=precision, recall=recall, f1=f1_score(precision, recall))


def summarize(rows: Sequence[MetricsRow]) -> MetricsRow:
    """Mean and population standard deviation over runs."""

    if not rows:
        raise DataValidationError("summarize needs at least one run")
    table = np.array([[r.precision, r.recall, r.f1] for r in rows], dtype=np.float64)
    mean = table.mean(axis=0)
    std = table.std(axis=0, ddof=0)
    return MetricsRow(
        precision=float(mean[0]),
        recall=float(mean[1]),
        f1=float(mean[2]),
        precision_std=float(std[0]),
        recall_std=float(std[1]),
        f1_std=float(std[2]),
        n_runs=len(rows),
    )


def majority_baseline(
    train_labels: Sequence[int] | np.ndarray, test_labels: Sequence[int] | np.ndarray
) -> MetricsRow:
    """Predict the training split's majority class for every test patient (ties -> 1)."""

    train = np.asarray(train_labels)
    if train.size == 0:
        raise DataValidationError("majority baseline needs training labels")
    majority = 1.0 if train.mean() >= 0.5 else 0.0
    test = np.asarray(test_labels)
    return compute_metrics(np.full(test.shape, majority), test)
