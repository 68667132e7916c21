"""Reading firm accounting data and turning it into positive compositions.

Input is one row per firm, already joined so that the seven figures come
from the year before the one that defines the bankruptcy label.  The steps
are:

1. :func:`parse_records` reads delimited text, rejecting (and counting) rows
   with missing, non-numeric or negative figures.
2. :func:`filter_inactive` drops firms with zero total assets, zero
   operating revenue or zero operating expenses.
3. :func:`impute_zeros` replaces remaining zeros by a fraction of the
   smallest positive value of the same part (multiplicative replacement).
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .coda import PARTS
from .errors import ConfigError, DataError, ImputationError

FIGURE_FIELDS = ("nca", "ca", "re", "ncl", "cl", "or_", "oe")

INACTIVE_RULE = (
    "a firm is removed as inactive if total assets (NCA+CA) = 0, or OR = 0, or OE = 0"
)
IMPUTATION_NOTE = (
    "zeros replaced by multiplicative replacement: delta_fraction x smallest "
    "positive value of the same part (substitute for log-ratio EM imputation)"
)

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


@dataclass(frozen=True)
class Schema:
    """Column names for each required field."""

    id: str = "id"
    year: str = "year"
    nca: str = "NCA"
    ca: str = "CA"
    re: str = "RE"
    ncl: str = "NCL"
    cl: str = "CL"
    or_: str = "OR"
    oe: str = "OE"
    bankrupt: str = "bankrupt"

    def required(self) -> dict[str, str]:
        return {k: getattr(self, k) for k in ("id", "year", *FIGURE_FIELDS, "bankrupt")}

    @classmethod
    def with_overrides(cls, overrides: dict[str, str]) -> "Schema":
        known = set(cls().required())
        aliases = {"or": "or_"}
        mapped = {}
        for key, name in overrides.items():
            k = aliases.get(key.lower(), key.lower())
            if k not in known:
                raise ConfigError(f"unknown schema field {key!r}; expected one of {', '.join(sorted(known))}")
            mapped[k] = name
        return cls(**mapped)


@dataclass(frozen=True)
class AccountingRecord:
    firm_id: str
    period: int
    nca: float
    ca: float
    re: float
    ncl: float
    cl: float
    or_: float
    oe: float
    bankrupt: bool

    def figures(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in FIGURE_FIELDS)


@dataclass(frozen=True)
class Rejection:
    row: int
    reason: str


@dataclass
class ParseResult:
    records: list[AccountingRecord]
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.rejections)

    def report_text(self) -> str:
        lines = [f"parsed records: {len(self.records)}", f"rejected rows: {self.rejected_count}"]
        lines += [f"row {r.row}: {r.reason}" for r in self.rejections]
        return "\n".join(lines) + "\n"


def _parse_label(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"bankrupt label {text!r} is not 0/1")


def parse_records(source: TextIO | str | Path, schema: Schema = Schema(), delimiter: str = ",") -> ParseResult:
    """Parse delimited text with a header row into accounting records.

    Row numbers in rejections count the header as row 1, so they match a
    spreadsheet view of the file.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return parse_records(fh, schema, delimiter)

    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("input is empty; a header row is required") from None
    positions = {}
    for key, name in schema.required().items():
        if name not in header:
            raise ConfigError(f"required column {name!r} ({key}) not found in header")
        positions[key] = header.index(name)

    result = ParseResult([])
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) < len(header):
                raise ValueError(f"expected {len(header)} fields, found {len(row)}")
            values = {}
            for f in FIGURE_FIELDS:
                raw = row[positions[f]].strip()
                try:
                    v = float(raw)
                except ValueError:
                    raise ValueError(f"{getattr(schema, f)}={raw!r} is not numeric") from None
                if not math.isfinite(v):
                    raise ValueError(f"{getattr(schema, f)}={raw!r} is not finite")
                if v < 0:
                    raise ValueError(f"{getattr(schema, f)}={raw!r} is negative")
                values[f] = v
            year_raw = row[positions["year"]].strip()
            try:
                year = int(float(year_raw))
            except ValueError:
                raise ValueError(f"year {year_raw!r} is not a number") from None
            record = AccountingRecord(
                firm_id=row[positions["id"]].strip(),
                period=year,
                bankrupt=_parse_label(row[positions["bankrupt"]]),
                **values,
            )
        except ValueError as exc:
            result.rejections.append(Rejection(rownum, str(exc)))
            continue
        result.records.append(record)
    return result


def is_inactive(record: AccountingRecord) -> bool:
    return record.nca + record.ca == 0 or record.or_ == 0 or record.oe == 0


def filter_inactive(records: Iterable[AccountingRecord]) -> tuple[list[AccountingRecord], int]:
    retained, removed = [], 0
    for r in records:
        if is_inactive(r):
            removed += 1
        else:
            retained.append(r)
    return retained, removed


@dataclass(frozen=True)
class ZeroReport:
    n: int
    counts: dict[str, int]
    replacement_values: dict[str, float]
    delta_fraction: float

    @property
    def percentages(self) -> dict[str, float]:
        if self.n == 0:
            return {p: 0.0 for p in self.counts}
        return {p: 100.0 * c / self.n for p, c in self.counts.items()}

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "delta_fraction": self.delta_fraction,
            "method": IMPUTATION_NOTE,
            "zero_counts": dict(self.counts),
            "zero_percentages": self.percentages,
            "replacement_values": dict(self.replacement_values),
        }


def impute_zeros(records: list[AccountingRecord], delta_fraction: float = 0.65) -> tuple[np.ndarray, ZeroReport]:
    """Replace zeros part-wise and return an ``(n, 7)`` array of compositions.

    Each zero in part ``p`` becomes ``delta_fraction`` times the smallest
    strictly positive value of ``p`` in the sample.  Rows keep input order.
    """
    if not 0 < delta_fraction < 1:
        raise ConfigError(f"delta_fraction must lie in (0, 1), got {delta_fraction}")
    parts = np.array([r.figures() for r in records], dtype=float).reshape(-1, len(PARTS))
    counts, replacements = {}, {}
    for j, name in enumerate(PARTS):
        col = parts[:, j]
        zero = col == 0
        counts[name] = int(zero.sum())
        if not zero.any():
            continue
        positive = col[~zero]
        if positive.size == 0:
            raise ImputationError(f"part {name} is zero for every record; cannot impute")
        replacements[name] = delta_fraction * float(positive.min())
        col[zero] = replacements[name]
    return parts, ZeroReport(len(records), counts, replacements, delta_fraction)


@dataclass(frozen=True)
class Dataset:
    """Firms as positive compositions with bankruptcy labels."""

    ids: np.ndarray
    parts: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=str).reshape(-1)
        parts = np.asarray(self.parts, dtype=float).reshape(-1, len(PARTS))
        labels = np.asarray(self.labels, dtype=bool).reshape(-1)
        if not (len(ids) == len(parts) == len(labels)):
            raise DataError("ids, parts and labels differ in length")
        for name, arr in (("ids", ids), ("parts", parts), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.ids)

    @property
    def n_bankrupt(self) -> int:
        return int(self.labels.sum())

    @property
    def n_healthy(self) -> int:
        return len(self) - self.n_bankrupt

    def subset(self, index) -> "Dataset":
        return Dataset(self.ids[index], self.parts[index], self.labels[index])

    def fingerprint(self) -> str:
        """SHA-256 over the ordered row ids."""
        return hashlib.sha256("\n".join(self.ids.tolist()).encode("utf-8")).hexdigest()

    def to_csv(self, stream: TextIO, delimiter: str = ",", year: int = 2023, schema: Schema = Schema()) -> None:
        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        cols = schema.required()
        writer.writerow([cols["id"], cols["year"], *(cols[f] for f in FIGURE_FIELDS), cols["bankrupt"]])
        for i in range(len(self)):
            writer.writerow([self.ids[i], year, *(repr(float(v)) for v in self.parts[i]), int(self.labels[i])])


@dataclass
class IngestReport:
    parse: ParseResult
    removed_inactive: int
    zeros: ZeroReport

    def as_dict(self) -> dict:
        return {
            "parsed": len(self.parse.records),
            "rejected": self.parse.rejected_count,
            "removed_inactive": self.removed_inactive,
            "inactive_rule": INACTIVE_RULE,
            "retained": self.zeros.n,
            "zeros": self.zeros.as_dict(),
        }


def load_dataset(
    source: TextIO | str | Path,
    schema: Schema = Schema(),
    delimiter: str = ",",
    delta_fraction: float = 0.65,
) -> tuple[Dataset, IngestReport]:
    """Parse, drop inactive firms and impute zeros in one pass."""
    parsed = parse_records(source, schema, delimiter)
    retained, removed = filter_inactive(parsed.records)
    parts, zeros = impute_zeros(retained, delta_fraction)
    dataset = Dataset([r.firm_id for r in retained], parts, [r.bankrupt for r in retained])
    return dataset, IngestReport(parsed, removed, zeros)


def dataset_from_text(text: str, **kwargs) -> tuple[Dataset, IngestReport]:
    return load_dataset(io.StringIO(text), **kwargs)
