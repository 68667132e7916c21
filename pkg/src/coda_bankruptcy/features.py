"""Feature matrices built from compositions, and their text export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from . import coda, ratios


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    labels: np.ndarray | None = None
    ids: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, len(self.columns)) if self.columns else values.reshape(-1, 0)
        if values.shape[1] != len(self.columns):
            raise ValueError(f"{values.shape[1]} value columns but {len(self.columns)} names")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=bool)
            if labels.shape != (values.shape[0],):
                raise ValueError("labels must have one entry per row")
            object.__setattr__(self, "labels", labels)
        if self.ids is not None:
            object.__setattr__(self, "ids", np.asarray(self.ids, dtype=str))

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def finite_rows(self) -> np.ndarray:
        return np.all(np.isfinite(self.values), axis=1)

    def rows(self, index) -> "FeatureMatrix":
        return FeatureMatrix(
            self.values[index],
            self.columns,
            None if self.labels is None else self.labels[index],
            None if self.ids is None else self.ids[index],
        )

    def to_csv(self, stream: TextIO, delimiter: str = ",") -> None:
        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        header = (["id"] if self.ids is not None else []) + list(self.columns)
        if self.labels is not None:
            header.append("bankrupt")
        writer.writerow(header)
        for i in range(len(self)):
            row = [self.ids[i]] if self.ids is not None else []
            row.extend(repr(float(v)) for v in self.values[i])
            if self.labels is not None:
                row.append(int(self.labels[i]))
            writer.writerow(row)


def standard_features(parts, labels=None, ids=None) -> FeatureMatrix:
    return FeatureMatrix(ratios.standard_ratios(parts).reshape(-1, 10), ratios.STANDARD_LABELS, labels, ids)


def spanning_features(parts, labels=None, ids=None, graph: coda.PlrGraph = coda.SPANNING_GRAPH) -> FeatureMatrix:
    values = coda.spanning_plr_features(parts, graph).reshape(-1, len(graph.edges))
    return FeatureMatrix(values, tuple(graph.labels), labels, ids)


def full_plr_matrix(parts, labels=None, ids=None) -> FeatureMatrix:
    return FeatureMatrix(coda.full_plr_features(parts).reshape(-1, 21), coda.FULL_PLR_LABELS, labels, ids)


def clr_matrix(parts, labels=None, ids=None) -> FeatureMatrix:
    return FeatureMatrix(coda.clr(parts).reshape(-1, coda.D), tuple(f"clr({p})" for p in coda.PARTS), labels, ids)
