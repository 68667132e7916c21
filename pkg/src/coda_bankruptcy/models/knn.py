"""k-nearest-neighbour classification with Euclidean distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureMatrix

DEFAULT_K_GRID = tuple(range(1, 26, 2))
_CELL_BUDGET = 4_000_000


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    distance: str = "euclidean"

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError(f"k must be a positive odd integer, got {self.k}")
        if self.k > len(self.X):
            raise ValueError(f"k={self.k} exceeds training size {len(self.X)}")

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.center is None:
            return X
        return (X - self.center) / self.scale


def build_knn(X, y=None, k: int = 5, zscore: bool = False) -> KnnModel:
    """Store the training set; with ``zscore`` columns are standardised by training moments."""
    if isinstance(X, FeatureMatrix):
        y = X.labels if y is None else y
        X = X.values
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    center = scale = None
    if zscore:
        center = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        X = (X - center) / scale
    return KnnModel(X, y, k, center, scale)


def neighbour_order(train: np.ndarray, query: np.ndarray, k_max: int | None = None) -> np.ndarray:
    """Indices of the ``k_max`` nearest training rows for each query row, nearest first.

    Equal distances keep training order, so ties at the k-th neighbour go
    to the lowest training index.
    """
    n_train = len(train)
    k_max = n_train if k_max is None else min(k_max, n_train)
    out = np.empty((len(query), k_max), dtype=np.intp)
    chunk = max(1, _CELL_BUDGET // max(1, n_train * max(1, train.shape[1])))
    for start in range(0, len(query), chunk):
        q = query[start : start + chunk]
        d2 = np.sum((q[:, None, :] - train[None, :, :]) ** 2, axis=2)
        out[start : start + chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k_max]
    return out


def _vote(order: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    votes = y[order[:, :k]].sum(axis=1)
    return 2 * votes > k


def knn_classify(model: KnnModel, query) -> np.ndarray:
    """Majority vote among the ``k`` nearest training rows."""
    Q = query.values if isinstance(query, FeatureMatrix) else np.asarray(query, dtype=float)
    if Q.size == 0:
        return np.zeros(0, dtype=bool)
    if Q.ndim == 1:
        Q = Q[None, :]
    if Q.shape[1] != model.X.shape[1]:
        raise ValueError(f"model has {model.X.shape[1]} features, query has {Q.shape[1]}")
    order = neighbour_order(model.X, model.transform(Q), model.k)
    return _vote(order, model.y, model.k)


@dataclass
class KnnTuning:
    best_k: int
    accuracy: dict[int, float]
    skipped: list[str] = field(default_factory=list)

    def table(self) -> list[dict]:
        return [{"k": k, "accuracy": a} for k, a in self.accuracy.items()]


def tune_knn(train: FeatureMatrix, valid: FeatureMatrix, k_grid=DEFAULT_K_GRID, zscore: bool = False) -> KnnTuning:
    """Pick the k with the highest overall validation accuracy (ties go to the smaller k)."""
    if not len(k_grid):
        raise ValueError("k grid is empty")
    base = build_knn(train, k=1, zscore=zscore)
    k_max = max(int(k) for k in k_grid)
    order = neighbour_order(base.X, base.transform(valid.values), k_max) if len(valid) else None
    accuracy: dict[int, float] = {}
    skipped = []
    for k in sorted(set(int(k) for k in k_grid)):
        if k < 1 or k % 2 == 0:
            skipped.append(f"k={k} skipped: not a positive odd integer")
            continue
        if k > len(train):
            skipped.append(f"k={k} skipped: exceeds training size {len(train)}")
            continue
        pred = _vote(order, base.y, k) if order is not None else np.zeros(0, dtype=bool)
        accuracy[k] = 100.0 * float(np.mean(pred == valid.labels)) if len(valid) else 0.0
    if not accuracy:
        raise ValueError("no usable k in the grid")
    best = max(accuracy, key=lambda k: (accuracy[k], -k))
    return KnnTuning(best, accuracy, skipped)
