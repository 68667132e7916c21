import math

import numpy as np
import pytest

from coda_bankruptcy.errors import ConfigError
from coda_bankruptcy.features import spanning_features
from coda_bankruptcy.models.logistic import fit_logistic
from coda_bankruptcy.synthetic import generate_synthetic, solve_intercept


def test_rate_without_signal():
    n, rate = 20000, 0.03
    ds = generate_synthetic(1, n, rate)
    se = math.sqrt(rate * (1 - rate) / n)
    assert abs(ds.n_bankrupt / n - rate) < 3 * se


def test_empty():
    ds = generate_synthetic(1, 0)
    assert len(ds) == 0 and ds.parts.shape == (0, 7)


def test_positive_parts_and_ids():
    ds = generate_synthetic(2, 50)
    assert np.all(ds.parts > 0)
    assert ds.ids[0] == "S01" and ds.ids[-1] == "S50"


def test_seeded():
    a = generate_synthetic(9, 100, 0.1, {"log(OR/OE)": 1.0})
    b = generate_synthetic(9, 100, 0.1, {"log(OR/OE)": 1.0})
    np.testing.assert_array_equal(a.parts, b.parts)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_solve_intercept_hits_rate():
    linear = np.linspace(-3, 3, 101)
    c = solve_intercept(linear, 0.2)
    assert np.mean(1 / (1 + np.exp(-(c + linear)))) == pytest.approx(0.2, abs=1e-10)


def test_bad_arguments():
    with pytest.raises(ConfigError):
        generate_synthetic(0, 10, 1.5)
    with pytest.raises(ConfigError):
        generate_synthetic(0, 10, 0.1, {"log(CA/NCA)": 1.0})


def test_signal_sign_recovered():
    hits = 0
    for seed in range(20):
        ds = generate_synthetic(seed, 2000, 0.1, {"log(RE/NCL)": 1.0})
        model = fit_logistic(spanning_features(ds.parts, ds.labels))
        j = model.columns.index("log(RE/NCL)")
        hits += model.coefficients[j] > 0 and model.p_values[j] < 0.05
    assert hits >= 19
