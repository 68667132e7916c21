"""Random forest of Gini-impurity classification trees.

Each tree is grown on a bootstrap resample (``n`` draws with replacement)
until its nodes are pure or hold fewer than two samples.  At every node
``mtry`` features are drawn without replacement and the split minimising the
weighted Gini impurity of the children is taken, with the threshold at the
midpoint between consecutive distinct values.  Tree ``t`` draws all of its
randomness from ``numpy.random.default_rng(seed + t)``, so a forest depends
only on ``(data, n_trees, mtry, seed)`` and trees could be grown in any order.

Feature importance is the mean decrease in Gini impurity: for every split,
``N_node * G_node - N_left * G_left - N_right * G_right`` is credited to the
split feature, summed within a tree, then averaged over trees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureMatrix

LEAF = -1
_MAX = np.finfo(float).max


def default_mtry(n_features: int) -> int:
    """About a third of the features, rounded up: 4 of 10, 7 of 21."""
    return max(1, math.ceil(n_features / 3))


def forest_sentinels(X: np.ndarray) -> np.ndarray:
    """Replace ``+inf``/``-inf`` by the largest finite magnitudes and ``nan`` by 0."""
    return np.nan_to_num(np.asarray(X, dtype=float), nan=0.0, posinf=_MAX, neginf=-_MAX)


@dataclass
class DecisionTree:
    """Flat node arrays; node 0 is the root and ``feature == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.intp)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.label[self.apply(np.asarray(X, dtype=float))]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "label": [int(v) for v in self.label],
            "n_samples": self.n_samples.tolist(),
            "impurity": [float(v) for v in self.impurity],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.array(d["feature"], dtype=np.intp),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.intp),
            right=np.array(d["right"], dtype=np.intp),
            label=np.array(d["label"], dtype=bool),
            n_samples=np.array(d.get("n_samples", [0] * len(d["feature"])), dtype=np.intp),
            impurity=np.array(d.get("impurity", [0.0] * len(d["feature"])), dtype=float),
        )

    @classmethod
    def leaf(cls, label: bool) -> "DecisionTree":
        return cls(
            np.array([LEAF]), np.array([0.0]), np.array([LEAF]), np.array([LEAF]),
            np.array([bool(label)]), np.array([0]), np.array([0.0]),
        )


def gini(n_pos, n):
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


def best_split(Xs: np.ndarray, ys: np.ndarray):
    """Best split over the columns of ``Xs`` (node samples x candidate features).

    Returns ``(column, threshold, weighted_child_impurity)`` where the
    impurity is count-weighted (``N_l*G_l + N_r*G_r``), or ``None`` when no
    column has two distinct values.
    """
    m, f = Xs.shape
    order = np.argsort(Xs, axis=0, kind="stable")
    v = np.take_along_axis(Xs, order, axis=0)
    pos = ys[order].astype(float)
    pl = np.cumsum(pos, axis=0)[:-1]
    total = float(ys.sum())
    nl = np.arange(1, m, dtype=float)[:, None]
    nr = m - nl
    pr = total - pl
    w = 2.0 * pl * (nl - pl) / nl + 2.0 * pr * (nr - pr) / nr
    valid = v[1:] > v[:-1]
    if not valid.any():
        return None
    w = np.where(valid, w, np.inf)
    # feature-major search: first sampled feature wins exact ties, then lowest position
    flat = int(np.argmin(w.T))
    col, i = divmod(flat, m - 1)
    lo, hi = v[i, col], v[i + 1, col]
    thr = lo / 2.0 + hi / 2.0
    if not lo <= thr < hi:
        thr = lo
    return col, float(thr), float(w[i, col])


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator, importance: np.ndarray) -> DecisionTree:
    n, p = X.shape
    sample = rng.integers(0, n, size=n)
    feature, threshold, left, right, label, n_samples, impurity = [], [], [], [], [], [], []

    def new_node(idx):
        n_pos = int(y[idx].sum())
        m = len(idx)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        label.append(2 * n_pos >= m)
        n_samples.append(m)
        impurity.append(gini(n_pos, m) if m else 0.0)
        return len(feature) - 1

    stack = [(new_node(sample), sample)]
    while stack:
        node, idx = stack.pop()
        m = len(idx)
        if m < 2 or impurity[node] == 0.0:
            continue
        feats = rng.choice(p, size=mtry, replace=False)
        ys = y[idx]
        found = best_split(X[np.ix_(idx, feats)], ys)
        if found is None:
            continue
        col, thr, child = found
        decrease = m * impurity[node] - child
        if decrease <= 1e-12 * m:
            continue
        f = int(feats[col])
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        importance[f] += decrease
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))

    return DecisionTree(
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(label, dtype=bool),
        np.array(n_samples, dtype=np.intp),
        np.array(impurity, dtype=float),
    )


@dataclass
class Forest:
    trees: list[DecisionTree]
    n_trees: int
    mtry: int
    seed: int
    columns: tuple[str, ...]
    importance: np.ndarray
    notes: list[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def to_dict(self) -> dict:
        return {
            "type": "random_forest",
            "n_trees": self.n_trees,
            "mtry": self.mtry,
            "seed": self.seed,
            "columns": list(self.columns),
            "importance": [float(v) for v in self.importance],
            "notes": list(self.notes),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            n_trees=int(d["n_trees"]),
            mtry=int(d["mtry"]),
            seed=int(d["seed"]),
            columns=tuple(d["columns"]),
            importance=np.array(d["importance"], dtype=float),
            notes=list(d.get("notes", [])),
        )


def fit_forest(X, y=None, n_trees: int = 100, mtry: int | None = None, seed: int = 0) -> Forest:
    if isinstance(X, FeatureMatrix):
        columns = X.columns
        y = X.labels if y is None else y
        X = X.values
    else:
        X = np.asarray(X, dtype=float)
        columns = tuple(f"x{j}" for j in range(X.shape[1]))
    X = forest_sentinels(X)
    y = np.asarray(y, dtype=bool)
    n, p = X.shape
    if len(y) != n:
        raise ValueError("X and y differ in length")
    if n == 0:
        raise ValueError("cannot grow a forest on zero rows")
    if n_trees < 1:
        raise ValueError("n_trees must be positive")
    mtry = default_mtry(p) if mtry is None else int(mtry)
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}], got {mtry}")

    notes = []
    if y.all() or not y.any():
        msg = "training labels contain a single class; forest predicts that class everywhere"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    importance = np.zeros(p)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        trees.append(grow_tree(X, y, mtry, rng, importance))
    return Forest(trees, n_trees, mtry, seed, tuple(columns), importance / n_trees, notes)


def forest_votes(forest: Forest, X) -> np.ndarray:
    """Number of trees voting bankrupt for each row."""
    X = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != forest.n_features:
        raise ValueError(f"forest has {forest.n_features} features, input has {X.shape[1]}")
    X = forest_sentinels(X)
    votes = np.zeros(len(X), dtype=np.intp)
    for tree in forest.trees:
        votes += tree.predict(X)
    return votes


def predict_forest(forest: Forest, X) -> np.ndarray:
    """Majority vote; an exact tie goes to bankrupt."""
    return 2 * forest_votes(forest, X) >= len(forest.trees)


def variable_importance(forest: Forest, top_n: int = 10) -> list[tuple[str, float]]:
    """Features by descending mean Gini decrease; equal values keep column order."""
    order = sorted(range(forest.n_features), key=lambda j: -forest.importance[j])
    return [(forest.columns[j], float(forest.importance[j])) for j in order[:top_n]]
