"""Binary logistic regression fitted by iteratively reweighted least squares."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, NumericError, RankDeficiencyError
from ..features import FeatureMatrix

SEPARATION_EPS = 1e-10
DIVERGENCE_BOUND = 1e4
_ETA_CLIP = 700.0


def sigmoid(eta):
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log_likelihood(beta: np.ndarray, design: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood; ``design`` already carries the intercept column."""
    eta = design @ beta
    # log(1 + e^eta) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def score(beta: np.ndarray, design: np.ndarray, y: np.ndarray) -> np.ndarray:
    return design.T @ (y - sigmoid(design @ beta))


def dependent_columns(design: np.ndarray, names: list[str]) -> list[str]:
    """Columns that are linear combinations of earlier ones (greedy, left to right)."""
    norms = np.linalg.norm(design, axis=0)
    scaled = design / np.where(norms > 0, norms, 1.0)
    kept: list[int] = []
    dependent = []
    for j in range(design.shape[1]):
        trial = scaled[:, kept + [j]]
        if norms[j] == 0 or np.linalg.matrix_rank(trial) <= len(kept):
            dependent.append(names[j])
        else:
            kept.append(j)
    return dependent


@dataclass
class LogisticModel:
    columns: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float
    standard_errors: np.ndarray
    intercept_se: float
    converged: bool
    iterations: int
    separation_flag: bool
    log_likelihood: float
    n_obs: int
    aliased: tuple[str, ...] = field(default=())

    @property
    def z_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.standard_errors

    @property
    def p_values(self) -> np.ndarray:
        """Two-sided Wald p-values; ``nan`` for aliased coefficients."""
        z = self.z_values
        return np.array([math.erfc(abs(v) / math.sqrt(2.0)) if np.isfinite(v) else math.nan for v in z])

    def significant(self, level: float = 0.05) -> list[str]:
        if self.separation_flag:
            return []
        return [c for c, p in zip(self.columns, self.p_values) if np.isfinite(p) and p < level]

    def coefficient_table(self) -> list[dict]:
        rows = [
            {
                "term": "(intercept)",
                "estimate": self.intercept,
                "std_error": self.intercept_se,
                "z": self.intercept / self.intercept_se if self.intercept_se > 0 else None,
                "p_value": math.erfc(abs(self.intercept / self.intercept_se) / math.sqrt(2.0))
                if self.intercept_se > 0
                else None,
            }
        ]
        for c, b, se, z, p in zip(self.columns, self.coefficients, self.standard_errors, self.z_values, self.p_values):
            rows.append(
                {
                    "term": c,
                    "estimate": None if not np.isfinite(b) else float(b),
                    "std_error": None if not np.isfinite(se) else float(se),
                    "z": None if not np.isfinite(z) else float(z),
                    "p_value": None if not np.isfinite(p) else float(p),
                }
            )
        return rows

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in a]

        return {
            "type": "logistic",
            "columns": list(self.columns),
            "coefficients": clean(self.coefficients),
            "intercept": self.intercept,
            "standard_errors": clean(self.standard_errors),
            "intercept_se": self.intercept_se,
            "p_values": clean(self.p_values),
            "converged": self.converged,
            "iterations": self.iterations,
            "separation_flag": self.separation_flag,
            "log_likelihood": self.log_likelihood,
            "n_obs": self.n_obs,
            "aliased": list(self.aliased),
            "significance_suppressed": self.separation_flag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        def arr(a):
            return np.array([math.nan if v is None else v for v in a], dtype=float)

        return cls(
            columns=tuple(d["columns"]),
            coefficients=arr(d["coefficients"]),
            intercept=float(d["intercept"]),
            standard_errors=arr(d["standard_errors"]),
            intercept_se=float(d["intercept_se"]),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            separation_flag=bool(d["separation_flag"]),
            log_likelihood=float(d["log_likelihood"]),
            n_obs=int(d["n_obs"]),
            aliased=tuple(d.get("aliased", ())),
        )


def _as_xy(X, y):
    if isinstance(X, FeatureMatrix):
        columns = X.columns
        if y is None:
            y = X.labels
        X = X.values
    else:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        columns = tuple(f"x{j}" for j in range(X.shape[1]))
    if y is None:
        raise ValueError("labels are required")
    return X, np.asarray(y, dtype=float).ravel(), columns


def fit_logistic(X, y=None, tol: float = 1e-8, max_iter: int = 50, drop_aliased: bool = False) -> LogisticModel:
    """Maximum-likelihood logit fit by Newton-Raphson / IRLS.

    Iterates ``beta += (X'WX)^-1 X'(y - p)`` from zero until the largest
    absolute coefficient change falls below ``tol``.  Linearly dependent
    columns raise :class:`RankDeficiencyError`, unless ``drop_aliased`` is
    set, in which case they are left out of the fit and get ``nan``
    coefficients (the later of two collinear columns is the one dropped).

    ``separation_flag`` is raised when any fitted probability ends within
    1e-10 of 0 or 1, or coefficients exceed 1e4 in magnitude; standard errors
    are then unreliable and :meth:`LogisticModel.significant` reports nothing.
    """
    X, y, columns = _as_xy(X, y)
    n, p = X.shape
    if len(y) != n:
        raise ValueError("X and y differ in length")
    if not np.all(np.isfinite(X)):
        raise DataError("design contains non-finite values; exclude those rows first")
    if n == 0 or y.min() == y.max():
        raise DataError("logistic regression needs at least one observation of each class")

    design = np.column_stack([np.ones(n), X])
    names = ["(intercept)", *columns]
    dependent = dependent_columns(design, names)
    if dependent and not drop_aliased:
        raise RankDeficiencyError(dependent)
    if "(intercept)" in dependent:
        raise NumericError("intercept is collinear with the predictors")
    keep = [j for j, name in enumerate(names) if name not in dependent]
    Z = design[:, keep]

    beta = np.zeros(Z.shape[1])
    ll = log_likelihood(beta, Z, y)
    converged = False
    diverged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = np.clip(Z @ beta, -_ETA_CLIP, _ETA_CLIP)
        mu = sigmoid(eta)
        w = mu * (1.0 - mu)
        info = Z.T @ (w[:, None] * Z)
        grad = Z.T @ (y - mu)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            diverged = True
            break
        # step halving keeps the likelihood from decreasing
        for _ in range(30):
            new_ll = log_likelihood(beta + step, Z, y)
            if new_ll >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            step = step / 2.0
        ll = new_ll
        beta = beta + step
        if np.max(np.abs(beta)) > DIVERGENCE_BOUND:
            diverged = True
            break
        if np.max(np.abs(step)) < tol:
            converged = True
            break

    mu = sigmoid(np.clip(Z @ beta, -_ETA_CLIP, _ETA_CLIP))
    separated = diverged or bool(np.any((mu < SEPARATION_EPS) | (mu > 1.0 - SEPARATION_EPS)))
    w = mu * (1.0 - mu)
    info = Z.T @ (w[:, None] * Z)
    try:
        cov = np.linalg.inv(info)
        se = np.sqrt(np.where(np.diag(cov) > 0, np.diag(cov), np.nan))
    except np.linalg.LinAlgError:
        se = np.full(Z.shape[1], np.nan)

    full_beta = np.full(p + 1, np.nan)
    full_se = np.full(p + 1, np.nan)
    full_beta[keep] = beta
    full_se[keep] = se
    return LogisticModel(
        columns=tuple(columns),
        coefficients=full_beta[1:],
        intercept=float(full_beta[0]),
        standard_errors=full_se[1:],
        intercept_se=float(full_se[0]),
        converged=converged,
        iterations=iterations,
        separation_flag=separated,
        log_likelihood=log_likelihood(beta, Z, y),
        n_obs=n,
        aliased=tuple(dependent),
    )


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    X = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != len(model.columns):
        raise ValueError(f"model has {len(model.columns)} features, input has {X.shape[1]}")
    coef = np.where(np.isfinite(model.coefficients), model.coefficients, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        eta = model.intercept + X @ coef
    return sigmoid(np.nan_to_num(eta, nan=0.0, posinf=_ETA_CLIP, neginf=-_ETA_CLIP))


def predict_logistic(model: LogisticModel, X, threshold: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(labels, probabilities)``; a row is bankrupt iff ``p >= threshold``."""
    prob = predict_proba(model, X)
    return prob >= threshold, prob
