"""Compositional representation of the seven accounting figures.

A firm is described by the composition

    (NCA, CA, RE, NCL, CL, OR, OE)

of non-current assets, current assets, retained earnings, non-current
liabilities, current liabilities, operating revenue and operating expenses.
Only ratios between parts carry information, so every transform here is
invariant to multiplying the whole composition by a positive constant.

All transforms accept either a single composition (shape ``(7,)``) or a
stack of compositions (shape ``(n, 7)``) and operate along the last axis.
Natural logarithms are used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import PlrGraphError

PARTS: tuple[str, ...] = ("NCA", "CA", "RE", "NCL", "CL", "OR", "OE")
D = len(PARTS)
PART_INDEX = {name: i for i, name in enumerate(PARTS)}


def _check_parts(x) -> np.ndarray:
    arr = np.asarray(x.parts if isinstance(x, Composition) else x, dtype=float)
    if arr.shape[-1] != D:
        raise ValueError(f"expected {D} parts along the last axis, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("composition parts must be finite and strictly positive")
    return arr


def _part(name: str) -> int:
    try:
        return PART_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown part {name!r}; expected one of {', '.join(PARTS)}") from None


@dataclass(frozen=True)
class Composition:
    """A validated, strictly positive 7-part composition."""

    parts: np.ndarray

    def __post_init__(self):
        arr = _check_parts(self.parts)
        if arr.ndim != 1:
            raise ValueError("a Composition holds exactly one 7-vector")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "parts", arr)

    @classmethod
    def from_mapping(cls, values: dict) -> "Composition":
        return cls(np.array([values[p] for p in PARTS], dtype=float))

    def __getitem__(self, name: str) -> float:
        return float(self.parts[_part(name)])

    def scaled(self, k: float) -> "Composition":
        return Composition(self.parts * k)


def plr(x, num: str, den: str):
    """Pairwise log-ratio ``log(x[num] / x[den])``."""
    if num == den:
        raise ValueError("a pairwise log-ratio needs two different parts")
    arr = _check_parts(x)
    i, j = _part(num), _part(den)
    return np.log(arr[..., i]) - np.log(arr[..., j])


def plr_label(num: str, den: str) -> str:
    return f"log({num}/{den})"


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    problems: tuple[str, ...] = ()

    def __bool__(self):
        return self.valid

    def message(self) -> str:
        if self.valid:
            return "valid spanning tree"
        return "invalid: " + "; ".join(self.problems)


@dataclass(frozen=True)
class PlrGraph:
    """Ordered part pairs ``(numerator, denominator)`` defining log-ratios.

    ``names`` optionally gives a financial reading for each edge, used in
    reports only; feature columns are always labelled ``log(A/B)``.
    """

    edges: tuple[tuple[str, str], ...]
    names: tuple[str, ...] | None = None
    part_count: int = field(default=D)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        if self.names is not None:
            if len(self.names) != len(self.edges):
                raise ValueError("names must match edges one-to-one")
            object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def parse(cls, specs: Iterable[str]) -> "PlrGraph":
        """Build a graph from strings such as ``"NCA/CA"`` or ``"log(NCA/CA)"``."""
        edges = []
        for spec in specs:
            s = spec.strip()
            if not s:
                continue
            if s.lower().startswith("log(") and s.endswith(")"):
                s = s[4:-1]
            num, sep, den = s.partition("/")
            if not sep:
                raise ValueError(f"cannot parse edge {spec!r}; expected NUM/DEN")
            edges.append((num.strip().upper(), den.strip().upper()))
        return cls(tuple(edges))

    @property
    def labels(self) -> list[str]:
        return [plr_label(a, b) for a, b in self.edges]

    def validate(self) -> ValidationResult:
        return validate_spanning_plr(self)


def validate_spanning_plr(graph: PlrGraph) -> ValidationResult:
    """Accept ``graph`` iff its edges form a spanning tree over the parts.

    A spanning tree has exactly ``D - 1`` edges, reaches every part, and
    contains no cycle; anything more makes the log-ratios linearly dependent,
    anything less loses relative information.
    """
    problems: list[str] = []
    n = graph.part_count
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    seen: set[frozenset] = set()
    cycle = False
    for num, den in graph.edges:
        if num not in PART_INDEX or den not in PART_INDEX:
            bad = [p for p in (num, den) if p not in PART_INDEX]
            problems.append(f"unknown part(s) {', '.join(bad)}")
            continue
        if num == den:
            problems.append(f"self-loop {num}/{den}")
            continue
        pair = frozenset((num, den))
        if pair in seen:
            problems.append(f"duplicate pair {num}/{den}")
            continue
        seen.add(pair)
        ri, rj = find(PART_INDEX[num]), find(PART_INDEX[den])
        if ri == rj:
            cycle = True
        else:
            parent[ri] = rj

    if len(graph.edges) > n - 1:
        problems.append(f"too many edges ({len(graph.edges)} > {n - 1})")
    elif len(graph.edges) < n - 1:
        problems.append(f"too few edges ({len(graph.edges)} < {n - 1})")
    if cycle:
        problems.append("cycle")
    roots = {find(i) for i in range(n)}
    if len(roots) > 1:
        problems.append(f"not connected ({len(roots)} components)")
    return ValidationResult(not problems, tuple(problems))


SPANNING_GRAPH = PlrGraph(
    edges=(
        ("NCA", "CA"),
        ("OR", "CA"),
        ("OR", "OE"),
        ("CA", "CL"),
        ("NCL", "CL"),
        ("RE", "NCL"),
    ),
    names=(
        "asset tangibility",
        "current-asset turnover",
        "margin",
        "current ratio",
        "debt maturity",
        "retained earnings over non-current liabilities",
    ),
)

# All D(D-1)/2 pairs, in the conventional order; log(OR/CA) keeps its
# revenue-over-assets orientation.
FULL_PLR_EDGES: tuple[tuple[str, str], ...] = (
    ("NCA", "CA"),
    ("NCA", "RE"),
    ("NCA", "NCL"),
    ("NCA", "CL"),
    ("NCA", "OR"),
    ("NCA", "OE"),
    ("CA", "RE"),
    ("CA", "NCL"),
    ("CA", "CL"),
    ("OR", "CA"),
    ("CA", "OE"),
    ("RE", "NCL"),
    ("RE", "CL"),
    ("RE", "OR"),
    ("RE", "OE"),
    ("NCL", "CL"),
    ("NCL", "OR"),
    ("NCL", "OE"),
    ("CL", "OR"),
    ("CL", "OE"),
    ("OR", "OE"),
)
FULL_PLR_LABELS: tuple[str, ...] = tuple(plr_label(a, b) for a, b in FULL_PLR_EDGES)


def log_ratios(x, edges: Sequence[tuple[str, str]]) -> np.ndarray:
    """One log-ratio per edge, without any check on the edge set."""
    logx = np.log(_check_parts(x))
    out = np.empty(logx.shape[:-1] + (len(edges),))
    for k, (num, den) in enumerate(edges):
        out[..., k] = logx[..., _part(num)] - logx[..., _part(den)]
    return out


def spanning_plr_features(x, graph: PlrGraph = SPANNING_GRAPH) -> np.ndarray:
    """The ``D - 1`` log-ratios of a spanning graph, in edge order."""
    result = validate_spanning_plr(graph)
    if not result:
        raise PlrGraphError(f"plr graph is not a spanning tree: {result.message()}")
    return log_ratios(x, graph.edges)


def full_plr_features(x) -> np.ndarray:
    """All 21 pairwise log-ratios in ``FULL_PLR_LABELS`` order."""
    return log_ratios(x, FULL_PLR_EDGES)


def clr(x) -> np.ndarray:
    logx = np.log(_check_parts(x))
    return logx - logx.mean(axis=-1, keepdims=True)


def aitchison_distance(x, y):
    """Euclidean distance between the clr vectors of ``x`` and ``y``."""
    return np.sqrt(np.sum((clr(x) - clr(y)) ** 2, axis=-1))
