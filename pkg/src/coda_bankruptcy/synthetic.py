"""Seeded synthetic firms with a known log-ratio signal, for testing the pipeline.

Log-figures are multivariate normal: a shared firm-size factor plus
part-specific noise, so the figures are lognormal and standard ratios
inherit heavy tails while log-ratios stay close to normal.  Bankruptcy is
Bernoulli with ``logit P = intercept + sum(coef * log-ratio)``; the intercept
is solved so the mean probability over the drawn firms equals the requested
rate.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .coda import D, SPANNING_GRAPH, PlrGraph, log_ratios
from .errors import ConfigError, DataError
from .ingest import Dataset
from .models.logistic import sigmoid

# Typical magnitudes (log of euros) for a small wholesale firm.
DEFAULT_LOG_MEAN = np.log([4.0e5, 1.2e6, 3.0e5, 2.5e5, 8.0e5, 3.0e6, 2.9e6])
SIZE_SD = 1.2
PART_SD = np.array([0.9, 0.5, 0.9, 1.0, 0.5, 0.4, 0.4])


def default_covariance() -> np.ndarray:
    cov = np.full((D, D), SIZE_SD**2)
    cov[np.diag_indices(D)] += PART_SD**2
    # revenue and expenses move together
    cov[5, 6] = cov[6, 5] = SIZE_SD**2 + 0.95 * PART_SD[5] * PART_SD[6]
    return cov


def solve_intercept(linear: np.ndarray, rate: float) -> float:
    """Intercept making the mean of ``sigmoid(intercept + linear)`` equal ``rate``."""

    def gap(c):
        return float(np.mean(sigmoid(c + linear))) - rate

    lo, hi = -60.0 - float(linear.max()), 60.0 - float(linear.min())
    if gap(lo) > 0 or gap(hi) < 0:
        raise DataError(f"bankruptcy rate {rate} cannot be reached")
    return brentq(gap, lo, hi, xtol=1e-12)


def generate_synthetic(
    seed: int,
    n_firms: int,
    bankruptcy_rate: float = 0.03,
    signal: Mapping[str, float] | None = None,
    graph: PlrGraph = SPANNING_GRAPH,
    log_mean: np.ndarray | None = None,
    cov: np.ndarray | None = None,
) -> Dataset:
    """Draw ``n_firms`` firms.

    ``signal`` maps log-ratio labels of ``graph`` (e.g. ``"log(RE/NCL)"``) to
    logit coefficients; missing labels get coefficient zero.
    """
    if not 0 < bankruptcy_rate < 1:
        raise ConfigError(f"bankruptcy rate must lie in (0, 1), got {bankruptcy_rate}")
    if n_firms < 0:
        raise ConfigError("n_firms must be non-negative")
    result = graph.validate()
    if not result:
        raise ConfigError(f"signal graph rejected: {result.message()}")
    signal = dict(signal or {})
    unknown = set(signal) - set(graph.labels)
    if unknown:
        raise ConfigError(f"signal refers to log-ratios outside the graph: {sorted(unknown)}")
    coef = np.array([signal.get(label, 0.0) for label in graph.labels])

    if n_firms == 0:
        return Dataset(np.zeros(0, dtype=str), np.zeros((0, D)), np.zeros(0, dtype=bool))

    rng = np.random.default_rng(seed)
    mean = DEFAULT_LOG_MEAN if log_mean is None else np.asarray(log_mean, dtype=float)
    cov = default_covariance() if cov is None else np.asarray(cov, dtype=float)
    parts = np.exp(rng.multivariate_normal(mean, cov, size=n_firms, method="cholesky"))
    f = log_ratios(parts, graph.edges)
    linear = f @ coef
    # center so the intercept search starts near zero
    linear = linear - linear.mean()
    intercept = solve_intercept(linear, bankruptcy_rate)
    labels = rng.random(n_firms) < sigmoid(intercept + linear)
    width = len(str(n_firms))
    ids = np.array([f"S{i:0{width}d}" for i in range(1, n_firms + 1)])
    return Dataset(ids, parts, labels)
