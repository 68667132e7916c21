"""Train/validation protocol, precision measures and the six-way comparison.

The protocol: one random 70/30 split, one 1:1 downsampling of the training
part (all bankrupt firms plus as many randomly chosen healthy firms), and
the same two subsets reused for every method and feature set.  The
validation part is never resampled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import features as feat
from .coda import SPANNING_GRAPH, PlrGraph
from .errors import CodaBankruptcyError, ConfigError, DataError
from .features import FeatureMatrix
from .ingest import Dataset
from .models import forest as rf
from .models import knn, logistic

METHODS = ("logit", "knn", "rf")
FEATURE_SETS = ("standard", "compositional")
METHOD_NAMES = {"logit": "Logistic regression", "knn": "k-nearest neighbours", "rf": "Random forests"}

_SPLIT_EPS = 1e-9


def train_size(n: int, fraction: float) -> int:
    # Tolerance keeps e.g. 0.7 * 100 = 70.00000000000001 and 0.3 * ... from
    # flipping across an integer boundary.
    return int(math.floor(fraction * n + _SPLIT_EPS))


def split(dataset: Dataset, train_fraction: float = 0.7, seed: int = 0, stratified: bool = False) -> tuple[Dataset, Dataset]:
    """Random partition without replacement into ``(train, valid)``.

    The training part has ``floor(train_fraction * n)`` rows.  With
    ``stratified`` the floor is applied per class instead, which can leave
    the training part one row short per class.
    """
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    if stratified:
        train_idx = []
        for cls in (True, False):
            members = np.flatnonzero(dataset.labels == cls)
            chosen = rng.permutation(members)[: train_size(len(members), train_fraction)]
            train_idx.append(chosen)
        train_idx = np.sort(np.concatenate(train_idx))
        mask = np.zeros(n, dtype=bool)
        mask[train_idx] = True
        valid_idx = np.flatnonzero(~mask)
    else:
        perm = rng.permutation(n)
        k = train_size(n, train_fraction)
        train_idx, valid_idx = np.sort(perm[:k]), np.sort(perm[k:])
    if len(train_idx) == 0 or len(valid_idx) == 0:
        raise DataError(f"split of {n} rows at {train_fraction} leaves an empty subset")
    return dataset.subset(train_idx), dataset.subset(valid_idx)


def downsample(train: Dataset, seed: int = 0) -> Dataset:
    """Keep every bankrupt firm and an equal number of randomly drawn healthy firms."""
    bankrupt = np.flatnonzero(train.labels)
    healthy = np.flatnonzero(~train.labels)
    if len(bankrupt) == 0:
        raise DataError("training subset has no bankrupt firms to balance against")
    if len(healthy) < len(bankrupt):
        raise DataError(f"only {len(healthy)} healthy firms for {len(bankrupt)} bankrupt ones")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(healthy, size=len(bankrupt), replace=False)
    return train.subset(np.sort(np.concatenate([bankrupt, chosen])))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=bool).ravel()
    p = np.asarray(predicted_labels, dtype=bool).ravel()
    if t.shape != p.shape:
        raise ValueError(f"{len(t)} true labels but {len(p)} predictions")
    return ConfusionMatrix(
        tp=int(np.sum(t & p)),
        fp=int(np.sum(~t & p)),
        tn=int(np.sum(~t & ~p)),
        fn=int(np.sum(t & ~p)),
    )


@dataclass(frozen=True)
class MetricsReport:
    """Precision measures in percent; ``None`` marks an undefined measure."""

    method: str
    feature_set: str
    accuracy: float
    sensitivity: float | None
    specificity: float | None
    balanced_accuracy: float | None
    confusion: ConfusionMatrix

    def as_dict(self) -> dict:
        d = asdict(self)
        d["confusion"] = asdict(self.confusion)
        return d


def metrics(cm: ConfusionMatrix, method: str = "", feature_set: str = "") -> MetricsReport:
    if cm.total == 0:
        raise DataError("no predictions to score")
    accuracy = 100.0 * (cm.tp + cm.tn) / cm.total
    sens = 100.0 * cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else None
    spec = 100.0 * cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp else None
    balanced = (sens + spec) / 2 if sens is not None and spec is not None else None
    return MetricsReport(method, feature_set, accuracy, sens, spec, balanced, cm)


@dataclass
class ExperimentConfig:
    seed: int = 42
    train_fraction: float = 0.7
    methods: tuple[str, ...] = METHODS
    feature_sets: tuple[str, ...] = FEATURE_SETS
    k_grid: tuple[int, ...] = knn.DEFAULT_K_GRID
    n_trees: int = 100
    mtry: int | None = None
    threshold: float = 0.5
    knn_zscore: bool = False
    stratified: bool = False
    logit_tol: float = 1e-8
    logit_max_iter: int = 50
    spanning_graph: PlrGraph = SPANNING_GRAPH

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.feature_sets = tuple(self.feature_sets)
        self.k_grid = tuple(int(k) for k in self.k_grid)
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; expected {METHODS}")
        bad = [f for f in self.feature_sets if f not in FEATURE_SETS]
        if bad:
            raise ConfigError(f"unknown feature set(s) {bad}; expected {FEATURE_SETS}")
        if not self.methods or not self.feature_sets:
            raise ConfigError("at least one method and one feature set are required")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train fraction must lie in (0, 1)")
        if not self.spanning_graph.validate():
            raise ConfigError(f"spanning graph rejected: {self.spanning_graph.validate().message()}")

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "split_seed": self.seed,
            "downsample_seed": self.seed + 1,
            "forest_seed": self.seed,
            "train_fraction": self.train_fraction,
            "methods": list(self.methods),
            "feature_sets": list(self.feature_sets),
            "k_grid": list(self.k_grid),
            "n_trees": self.n_trees,
            "mtry": self.mtry if self.mtry is not None else "ceil(n_features/3)",
            "threshold": self.threshold,
            "knn_zscore": self.knn_zscore,
            "stratified": self.stratified,
            "logit_tol": self.logit_tol,
            "logit_max_iter": self.logit_max_iter,
            "spanning_graph": [f"{a}/{b}" for a, b in self.spanning_graph.edges],
        }


def feature_matrix(dataset: Dataset, method: str, feature_set: str, graph: PlrGraph = SPANNING_GRAPH) -> FeatureMatrix:
    """Predictors for one grid cell.

    Standard ratios for every method; compositional runs use the spanning
    log-ratios for logistic regression and all 21 log-ratios otherwise.
    """
    if feature_set == "standard":
        return feat.standard_features(dataset.parts, dataset.labels, dataset.ids)
    if method == "logit":
        return feat.spanning_features(dataset.parts, dataset.labels, dataset.ids, graph)
    return feat.full_plr_matrix(dataset.parts, dataset.labels, dataset.ids)


def fill_nonfinite(values: np.ndarray, reference: np.ndarray) -> tuple[np.ndarray, int]:
    """Replace non-finite prediction inputs using the finite reference range per column.

    ``+inf`` becomes the column maximum, ``-inf`` the minimum, ``nan`` zero.
    """
    out = values.copy()
    bad = ~np.isfinite(out)
    if not bad.any():
        return out, 0
    for j in np.flatnonzero(bad.any(axis=0)):
        ref = reference[:, j][np.isfinite(reference[:, j])]
        hi = ref.max() if ref.size else 0.0
        lo = ref.min() if ref.size else 0.0
        col = out[:, j]
        col[np.isposinf(col)] = hi
        col[np.isneginf(col)] = lo
        col[np.isnan(col)] = 0.0
    return out, int(bad.any(axis=1).sum())


@dataclass
class CellResult:
    report: MetricsReport
    train_fingerprint: str
    valid_fingerprint: str
    excluded_train_rows: int = 0
    filled_valid_rows: int = 0
    model: object = None
    logistic_table: list[dict] | None = None
    significant: list[str] | None = None
    separation_flag: bool | None = None
    knn_tuning: knn.KnnTuning | None = None
    importance: list[tuple[str, float]] | None = None

    def summary(self) -> dict:
        d = {
            "method": self.report.method,
            "feature_set": self.report.feature_set,
            "train_fingerprint": self.train_fingerprint,
            "valid_fingerprint": self.valid_fingerprint,
            "excluded_train_rows_nonfinite": self.excluded_train_rows,
            "filled_valid_rows_nonfinite": self.filled_valid_rows,
        }
        if self.logistic_table is not None:
            d["logistic"] = {
                "coefficients": self.logistic_table,
                "significant_5pct": self.significant,
                "separation_flag": self.separation_flag,
                "converged": self.model.converged,
                "iterations": self.model.iterations,
                "aliased": list(self.model.aliased),
            }
        if self.knn_tuning is not None:
            d["knn"] = {
                "best_k": self.knn_tuning.best_k,
                "tuning": self.knn_tuning.table(),
                "skipped": self.knn_tuning.skipped,
            }
        if self.importance is not None:
            d["rf"] = {
                "mtry": self.model.mtry,
                "n_trees": self.model.n_trees,
                "importance_top10": [{"feature": f, "mean_decrease_gini": v} for f, v in self.importance],
            }
        return d


@dataclass
class GridResult:
    config: ExperimentConfig
    train: Dataset
    valid: Dataset
    cells: list[CellResult] = field(default_factory=list)
    split_counts: dict = field(default_factory=dict)

    @property
    def reports(self) -> list[MetricsReport]:
        return [c.report for c in self.cells]

    def cell(self, method: str, feature_set: str) -> CellResult:
        for c in self.cells:
            if c.report.method == method and c.report.feature_set == feature_set:
                return c
        raise KeyError((method, feature_set))


def _run_cell(method, feature_set, train, valid, config) -> CellResult:
    Xtr = feature_matrix(train, method, feature_set, config.spanning_graph)
    Xva = feature_matrix(valid, method, feature_set, config.spanning_graph)
    cell_kwargs = {}
    excluded = filled = 0
    if method in ("logit", "knn"):
        keep = Xtr.finite_rows()
        excluded = int((~keep).sum())
        Xtr = Xtr.rows(keep)
        values, filled = fill_nonfinite(Xva.values, Xtr.values)
        Xva = FeatureMatrix(values, Xva.columns, Xva.labels, Xva.ids)

    if method == "logit":
        model = logistic.fit_logistic(Xtr, tol=config.logit_tol, max_iter=config.logit_max_iter, drop_aliased=True)
        pred, _ = logistic.predict_logistic(model, Xva, config.threshold)
        cell_kwargs.update(
            model=model,
            logistic_table=model.coefficient_table(),
            significant=model.significant(0.05),
            separation_flag=model.separation_flag,
        )
    elif method == "knn":
        tuning = knn.tune_knn(Xtr, Xva, config.k_grid, zscore=config.knn_zscore)
        model = knn.build_knn(Xtr, k=tuning.best_k, zscore=config.knn_zscore)
        pred = knn.knn_classify(model, Xva)
        cell_kwargs.update(model=model, knn_tuning=tuning)
    else:
        model = rf.fit_forest(Xtr, n_trees=config.n_trees, mtry=config.mtry, seed=config.seed)
        pred = rf.predict_forest(model, Xva)
        cell_kwargs.update(model=model, importance=rf.variable_importance(model, 10))

    report = metrics(confusion(valid.labels, pred), method, feature_set)
    return CellResult(
        report,
        train.fingerprint(),
        valid.fingerprint(),
        excluded_train_rows=excluded,
        filled_valid_rows=filled,
        **cell_kwargs,
    )


def run_experiment_grid(dataset: Dataset, config: ExperimentConfig | None = None) -> GridResult:
    """Split once, downsample once, then fit and score every method x feature set."""
    config = config or ExperimentConfig()
    train_full, valid = split(dataset, config.train_fraction, config.seed, config.stratified)
    train = downsample(train_full, config.seed + 1)
    result = GridResult(
        config,
        train,
        valid,
        split_counts={
            "n": len(dataset),
            "train": {"n": len(train_full), "bankrupt": train_full.n_bankrupt, "healthy": train_full.n_healthy},
            "train_downsampled": {"n": len(train), "bankrupt": train.n_bankrupt, "healthy": train.n_healthy},
            "valid": {"n": len(valid), "bankrupt": valid.n_bankrupt, "healthy": valid.n_healthy},
        },
    )
    for method in METHODS:
        if method not in config.methods:
            continue
        for feature_set in FEATURE_SETS:
            if feature_set not in config.feature_sets:
                continue
            try:
                result.cells.append(_run_cell(method, feature_set, train, valid, config))
            except CodaBankruptcyError as exc:
                exc.args = (f"[{method}/{feature_set}] {exc}",)
                raise
    return result


def render_table(reports: list[MetricsReport]) -> str:
    """Aligned text table with one row per method and feature set."""

    def pct(v):
        return "n/a" if v is None else f"{v:.0f} %"

    head = ("Prediction method", "Accuracy", "Sensitivity", "Specificity", "Balanced accuracy")
    rows = [
        (
            f"{METHOD_NAMES.get(r.method, r.method)} ({r.feature_set})",
            pct(r.accuracy),
            pct(r.sensitivity),
            pct(r.specificity),
            pct(r.balanced_accuracy),
        )
        for r in reports
    ]
    widths = [max(len(x[i]) for x in [head, *rows]) for i in range(len(head))]
    lines = ["  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(row)) for row in [head, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
