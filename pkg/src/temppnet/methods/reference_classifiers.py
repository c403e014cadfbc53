"""k-nearest-neighbour and logistic-regression baselines over handcrafted features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from temppnet.errors import DataValidationError
from temppnet.evaluation.metrics import MetricsRow, compute_metrics


@dataclass(frozen=True, slots=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> Standardizer:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DataValidationError(f"standardize needs a non-empty 2D matrix, got {arr.shape}")
        return cls(mean=arr.mean(axis=0), std=arr.std(axis=0))

    def transform(self, x: np.ndarray) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        # Zero-variance columns map to 0.
        return np.where(self.std > 0, (arr - self.mean) / safe, 0.0)


def standardize(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """z-score both splits with the training split's statistics."""

    scaler = Standardizer.fit(train)
    return scaler.transform(train), scaler.transform(test)


def _require_two_classes(labels: np.ndarray) -> None:
    if np.unique(labels).size < 2:
        raise DataValidationError("reference classifiers need both classes in the training split")


def knn_predict(
    train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray, k: int = 5
) -> np.ndarray:
    """Majority vote of the k nearest training points (Euclidean, stable index order).

    A tied vote falls back to the single nearest neighbour.
    """

    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y).astype(int)
    test_x = np.asarray(test_x, dtype=np.float64)
    k = min(k, train_x.shape[0])
    d2 = ((test_x[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=-1)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    votes = train_y[order]
    ones = votes.sum(axis=1)
    zeros = k - ones
    pred = np.where(ones > zeros, 1, 0)
    tied = ones == zeros
    pred[tied] = votes[tied, 0]
    return pred


@dataclass(frozen=True, slots=True)
class LogisticModel:
    weights: np.ndarray
    bias: float

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return special.expit(np.asarray(x, dtype=np.float64) @ self.weights + self.bias)


def fit_logistic(
    x: np.ndarray,
    y: np.ndarray,
    *,
    l2: float = 1e-2,
    lr: float = 0.1,
    iterations: int = 2000,
) -> LogisticModel:
    """L2-regularized logistic regression by full-batch gradient descent from zero."""

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _require_two_classes(y)
    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    n = x.shape[0]
    for _ in range(iterations):
        p = special.expit(x @ w + b)
        err = p - y
        w -= lr * (x.T @ err / n + l2 * w)
        b -= lr * float(err.mean())
    return LogisticModel(weights=w, bias=b)


def reference_classify(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    *,
    k: int = 5,
) -> dict[str, MetricsRow]:
    """Standardize on the training split, then score 5-NN and logistic regression on test."""

    train_y = np.asarray(train_y).astype(int)
    _require_two_classes(train_y)
    train_z, test_z = standardize(train_x, test_x)
    knn = knn_predict(train_z, train_y, test_z, k=k)
    logistic = fit_logistic(train_z, train_y).predict_proba(test_z)
    return {
        "knn": compute_metrics(knn.astype(np.float64), test_y),
        "logistic": compute_metrics(logistic, test_y),
    }
