"""Distribution diagnostics for feature matrices.

Skewness and kurtosis use the moment-ratio ("g") estimators

    g1 = m3 / m2**1.5,    g2 = m4 / m2**2 - 3

with central sample moments ``m_k = mean((x - mean(x))**k)``.  Kurtosis is
reported in excess form, so a normal distribution scores 0 on both.

Outliers are counted with the 1.5 x IQR fence; quartiles are linearly
interpolated between order statistics and the fence is closed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .features import FeatureMatrix

ESTIMATOR_NOTE = (
    "skewness g1 = m3/m2^1.5, excess kurtosis g2 = m4/m2^2 - 3 (biased moment-ratio "
    "estimators); non-finite values dropped before computing moments"
)
QUARTILE_NOTE = (
    "IQR rule: flag x > Q3 + 1.5*IQR or x < Q1 - 1.5*IQR; quartiles by linear "
    "interpolation of order statistics; values on the fence are not flagged"
)


@dataclass(frozen=True)
class MomentStatistic:
    value: float
    n: int
    dropped: int = 0
    degenerate: bool = False

    def __float__(self):
        return self.value


def _central_moments(sample, min_n: int):
    x = np.asarray(sample, dtype=float).ravel()
    finite = np.isfinite(x)
    dropped = int((~finite).sum())
    x = x[finite]
    if x.size < min_n:
        raise InsufficientDataError(f"need at least {min_n} finite values, got {x.size}")
    d = x - x.mean()
    m2 = np.mean(d**2)
    # A spread far below the mean's rounding error is treated as zero variance.
    scale = max(abs(x.mean()), np.max(np.abs(x)))
    degenerate = m2 <= (np.finfo(float).eps * scale) ** 2 * 16
    return d, m2, x.size, dropped, degenerate


def skewness(sample) -> MomentStatistic:
    d, m2, n, dropped, degenerate = _central_moments(sample, 3)
    if degenerate:
        return MomentStatistic(0.0, n, dropped, True)
    return MomentStatistic(float(np.mean(d**3) / m2**1.5), n, dropped)


def excess_kurtosis(sample) -> MomentStatistic:
    d, m2, n, dropped, degenerate = _central_moments(sample, 4)
    if degenerate:
        return MomentStatistic(0.0, n, dropped, True)
    return MomentStatistic(float(np.mean(d**4) / m2**2 - 3.0), n, dropped)


@dataclass(frozen=True)
class OutlierCount:
    columns: tuple[str, ...]
    per_column: tuple[int, ...]
    rows_flagged: int
    n_rows: int

    def as_dict(self) -> dict:
        return {
            "rule": QUARTILE_NOTE,
            "n_rows": self.n_rows,
            "rows_flagged": self.rows_flagged,
            "rows_flagged_pct": 100.0 * self.rows_flagged / self.n_rows if self.n_rows else 0.0,
            "per_column": dict(zip(self.columns, self.per_column)),
        }


def iqr_flags(features: FeatureMatrix) -> np.ndarray:
    """Boolean mask of cells outside the IQR fences.

    Fences come from the finite values of each column; ``+/-inf`` cells are
    always flagged and ``nan`` cells never are.
    """
    v = features.values
    flags = np.zeros(v.shape, dtype=bool)
    for j in range(v.shape[1]):
        col = v[:, j]
        finite = col[np.isfinite(col)]
        if finite.size == 0:
            flags[:, j] = np.isinf(col)
            continue
        q1, q3 = np.quantile(finite, [0.25, 0.75], method="linear")
        iqr = q3 - q1
        with np.errstate(invalid="ignore"):
            flags[:, j] = (col > q3 + 1.5 * iqr) | (col < q1 - 1.5 * iqr)
    return flags


def iqr_outlier_count(features: FeatureMatrix) -> OutlierCount:
    flags = iqr_flags(features)
    return OutlierCount(
        features.columns,
        tuple(int(c) for c in flags.sum(axis=0)),
        int(flags.any(axis=1).sum()),
        len(features),
    )


@dataclass(frozen=True)
class DiagnosticRow:
    feature: str
    skewness: float | None
    kurtosis: float | None
    n: int
    dropped: int
    degenerate: bool


def _row(name: str, column: np.ndarray) -> DiagnosticRow:
    try:
        s = skewness(column)
        k = excess_kurtosis(column)
    except InsufficientDataError:
        finite = int(np.isfinite(column).sum())
        return DiagnosticRow(name, None, None, finite, len(column) - finite, True)
    return DiagnosticRow(name, s.value, k.value, s.n, s.dropped, s.degenerate or k.degenerate)


@dataclass
class DiagnosticsTable:
    rows: list[DiagnosticRow]

    def __len__(self):
        return len(self.rows)

    def as_json(self) -> dict:
        return {
            "estimator": ESTIMATOR_NOTE,
            "rows": [
                {"feature": r.feature, "skewness": r.skewness, "kurtosis": r.kurtosis}
                | {"n": r.n, "dropped_nonfinite": r.dropped, "degenerate": r.degenerate}
                for r in self.rows
            ],
        }

    def to_delimited(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["feature", "skewness", "kurtosis"])
        for r in self.rows:
            writer.writerow([r.feature, "" if r.skewness is None else r.skewness, "" if r.kurtosis is None else r.kurtosis])
        return buf.getvalue()

    def render(self) -> str:
        width = max([len(r.feature) for r in self.rows] + [7])
        lines = [f"{'':<{width}}  {'Skewness':>10}  {'Kurtosis':>10}"]
        for r in self.rows:
            s = "n/a" if r.skewness is None else f"{r.skewness:.1f}"
            k = "n/a" if r.kurtosis is None else f"{r.kurtosis:.1f}"
            lines.append(f"{r.feature:<{width}}  {s:>10}  {k:>10}")
        lines.append("")
        lines.append(f"Note: {ESTIMATOR_NOTE}.")
        return "\n".join(lines) + "\n"


def diagnostics_table(standard: FeatureMatrix | None, compositional: FeatureMatrix | None) -> DiagnosticsTable:
    """Skewness and excess kurtosis per feature, standard ratios first."""
    if standard is not None and compositional is not None and len(compositional.columns):
        if len(standard) != len(compositional):
            raise ValueError("standard and compositional matrices must share row count")
    rows = []
    for fm in (standard, compositional):
        if fm is None:
            continue
        for j, name in enumerate(fm.columns):
            rows.append(_row(name, fm.values[:, j]))
    return DiagnosticsTable(rows)


def table_to_json(table: DiagnosticsTable) -> str:
    return json.dumps(table.as_json(), indent=2, sort_keys=True)

