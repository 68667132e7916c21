"""The ten standard financial ratios: Altman's five plus five common extensions.

Net worth is taken at book value, ``NCA + CA - NCL - CL``.  Return on equity
divides by net worth, which can be exactly zero; such values are left
non-finite (``+/-inf``, or ``nan`` when operating profit is also zero) and
reported through :class:`StandardRatioVector.flags` or
:func:`nonfinite_report` rather than clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .coda import _check_parts

ALTMAN_NAMES = (
    "working_capital",
    "retained_over_assets",
    "roa",
    "networth_over_liabilities",
    "turnover",
)
EXTENDED_NAMES = (
    "profit_over_cl",
    "current_ratio",
    "inverted_leverage",
    "roe",
    "indebtedness",
)
RATIO_NAMES = ALTMAN_NAMES + EXTENDED_NAMES

RATIO_LABELS = {
    "working_capital": "(CA-CL)/(NCA+CA)",
    "retained_over_assets": "RE/(NCA+CA)",
    "roa": "(OR-OE)/(NCA+CA)",
    "networth_over_liabilities": "(NCA+CA-NCL-CL)/(NCL+CL)",
    "turnover": "OR/(NCA+CA)",
    "profit_over_cl": "(OR-OE)/CL",
    "current_ratio": "CA/CL",
    "inverted_leverage": "(NCA+CA-NCL-CL)/(NCA+CA)",
    "roe": "(OR-OE)/(NCA+CA-NCL-CL)",
    "indebtedness": "(NCL+CL)/(NCA+CA)",
}
STANDARD_LABELS: tuple[str, ...] = tuple(RATIO_LABELS[n] for n in RATIO_NAMES)


def _unpack(x):
    arr = _check_parts(x)
    return tuple(arr[..., i] for i in range(7))


def altman_ratios(x) -> np.ndarray:
    """Altman's five ratios, stacked along the last axis."""
    nca, ca, re, ncl, cl, or_, oe = _unpack(x)
    assets = nca + ca
    liabilities = ncl + cl
    networth = _net_worth(nca, ca, ncl, cl)
    return np.stack(
        [
            (ca - cl) / assets,
            re / assets,
            (or_ - oe) / assets,
            networth / liabilities,
            or_ / assets,
        ],
        axis=-1,
    )


def _net_worth(nca, ca, ncl, cl):
    """Book net worth, snapped to exactly zero when it is below rounding noise.

    Assets equal to liabilities in exact arithmetic can leave a residue of a
    few ulps after subtraction; dividing by it would give a huge ROE whose
    sign depends on the scale of the inputs.
    """
    nw = nca + ca - ncl - cl
    noise = 4.0 * np.finfo(float).eps * (nca + ca + ncl + cl)
    return np.where(np.abs(nw) <= noise, 0.0, nw)


def extended_ratios(x) -> np.ndarray:
    """Profit over CL, current ratio, inverted leverage, ROE, indebtedness."""
    nca, ca, re, ncl, cl, or_, oe = _unpack(x)
    assets = nca + ca
    networth = _net_worth(nca, ca, ncl, cl)
    profit = or_ - oe
    with np.errstate(divide="ignore", invalid="ignore"):
        roe = profit / networth
    return np.stack(
        [
            profit / cl,
            ca / cl,
            networth / assets,
            roe,
            (ncl + cl) / assets,
        ],
        axis=-1,
    )


def standard_ratios(x) -> np.ndarray:
    """All ten ratios in ``RATIO_NAMES`` order."""
    return np.concatenate([altman_ratios(x), extended_ratios(x)], axis=-1)


@dataclass(frozen=True)
class StandardRatioVector:
    working_capital: float
    retained_over_assets: float
    roa: float
    networth_over_liabilities: float
    turnover: float
    profit_over_cl: float
    current_ratio: float
    inverted_leverage: float
    roe: float
    indebtedness: float
    flags: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_composition(cls, x) -> "StandardRatioVector":
        values = standard_ratios(x)
        if values.ndim != 1:
            raise ValueError("StandardRatioVector takes a single composition")
        flags = {}
        if not np.isfinite(values[RATIO_NAMES.index("roe")]):
            flags["roe"] = "zero net worth"
        return cls(*(float(v) for v in values), flags=flags)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self) if f.name != "flags"])


def nonfinite_report(values: np.ndarray) -> dict[str, int]:
    """Count non-finite cells per ratio in an ``(n, 10)`` matrix."""
    bad = ~np.isfinite(values)
    return {name: int(bad[:, j].sum()) for j, name in enumerate(RATIO_NAMES) if bad[:, j].any()}
