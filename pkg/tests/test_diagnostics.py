import json
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from coda_bankruptcy.diagnostics import (
    diagnostics_table,
    excess_kurtosis,
    iqr_flags,
    iqr_outlier_count,
    skewness,
)
from coda_bankruptcy.errors import InsufficientDataError
from coda_bankruptcy.features import FeatureMatrix, full_plr_matrix, standard_features
from coda_bankruptcy.synthetic import generate_synthetic


def exact_moments(sample):
    xs = [Fraction(v) for v in sample]
    mean = sum(xs) / len(xs)
    return [sum((x - mean) ** k for x in xs) / len(xs) for k in (2, 3, 4)]


class TestSkewness:
    def test_symmetric(self):
        assert skewness([-1, 0, 1]).value == 0.0

    def test_constant_is_degenerate(self):
        s = skewness([0.1] * 5)
        assert s.degenerate and s.value == 0.0

    def test_hand_computation(self):
        m2, m3, _ = exact_moments([1, 2, 3, 10])
        assert (m2, m3) == (Fraction(25, 2), Fraction(45))
        expected = float(m3) / float(m2) ** 1.5
        assert skewness([1, 2, 3, 10]).value == pytest.approx(expected, rel=1e-14)
        assert skewness([1, 2, 3, 10]).value == pytest.approx(stats.skew([1, 2, 3, 10], bias=True), rel=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            skewness([1.0, 2.0])

    def test_nonfinite_dropped_and_counted(self):
        s = skewness([1, 2, 3, 10, np.inf, np.nan])
        assert s.dropped == 2 and s.n == 4
        assert s.value == pytest.approx(skewness([1, 2, 3, 10]).value)


class TestKurtosis:
    def test_two_point_sample(self):
        assert excess_kurtosis([-1, 1, -1, 1]).value == pytest.approx(-2.0, abs=1e-15)

    def test_hand_computation(self):
        m2, _, m4 = exact_moments([1, 2, 3, 10])
        expected = float(m4 / m2**2) - 3
        assert expected == pytest.approx(-0.7696, abs=1e-12)
        assert excess_kurtosis([1, 2, 3, 10]).value == pytest.approx(expected, abs=1e-13)

    def test_normal_baseline(self):
        sample = np.random.default_rng(12345).standard_normal(100_000)
        assert abs(excess_kurtosis(sample).value) < 0.2
        assert abs(skewness(sample).value) < 0.2

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            excess_kurtosis([1.0, 2.0, 3.0])

    def test_constant_is_degenerate(self):
        assert excess_kurtosis([3.0] * 10).degenerate


def test_location_scale_invariance(rng):
    for _ in range(20):
        x = rng.lognormal(size=200)
        a, b = rng.normal() * 10, rng.uniform(0.01, 100)
        assert skewness(a + b * x).value == pytest.approx(skewness(x).value, abs=1e-9)
        assert excess_kurtosis(a + b * x).value == pytest.approx(excess_kurtosis(x).value, abs=1e-9)


class TestIqr:
    def test_single_outlier(self):
        fm = FeatureMatrix(np.array([[1.0], [2.0], [3.0], [4.0], [100.0]]), ("a",))
        # Q1 = 2, Q3 = 4 by interpolation, upper fence 7
        np.testing.assert_array_equal(iqr_flags(fm)[:, 0], [False, False, False, False, True])
        out = iqr_outlier_count(fm)
        assert out.per_column == (1,) and out.rows_flagged == 1

    def test_constant_column(self):
        fm = FeatureMatrix(np.full((6, 1), 3.0), ("a",))
        assert iqr_outlier_count(fm).rows_flagged == 0

    def test_value_on_fence_not_flagged(self):
        # Q1 = 2, Q3 = 4: fence at exactly 7
        fm = FeatureMatrix(np.array([[1.0], [2.0], [3.0], [4.0], [7.0]]), ("a",))
        assert iqr_outlier_count(fm).rows_flagged == 0

    def test_rows_counted_once(self):
        # a: Q1 2, Q3 3.75, fence 6.375; b: Q1 2.25, Q3 3.75, fence 6
        v = np.array([[1, 1], [2, 2], [3, 3], [4, 4], [100, 100], [2, 3]], dtype=float)
        out = iqr_outlier_count(FeatureMatrix(v, ("a", "b")))
        assert out.per_column == (1, 1)
        assert out.rows_flagged == 1

    def test_order_invariant(self, rng):
        v = rng.standard_cauchy((300, 4))
        perm = rng.permutation(300)
        f1 = iqr_flags(FeatureMatrix(v, tuple("abcd")))
        f2 = iqr_flags(FeatureMatrix(v[perm], tuple("abcd")))
        np.testing.assert_array_equal(f1[perm], f2)

    def test_infinite_cells_flagged(self):
        v = np.array([[1.0], [2.0], [3.0], [np.inf], [np.nan]])
        np.testing.assert_array_equal(iqr_flags(FeatureMatrix(v, ("a",)))[:, 0], [False, False, False, True, False])


class TestTable:
    def test_full_inventory_has_31_rows(self):
        ds = generate_synthetic(3, 300)
        table = diagnostics_table(standard_features(ds.parts), full_plr_matrix(ds.parts))
        assert len(table) == 31
        assert table.rows[0].feature == "(CA-CL)/(NCA+CA)"
        assert table.rows[-1].feature == "log(OR/OE)"
        payload = json.loads(json.dumps(table.as_json()))
        assert set(payload["rows"][0]) >= {"feature", "skewness", "kurtosis"}
        assert table.to_delimited().splitlines()[0] == "feature,skewness,kurtosis"
        assert "Skewness" in table.render()

    def test_standard_only(self):
        ds = generate_synthetic(3, 50)
        empty = FeatureMatrix(np.zeros((50, 0)), ())
        assert len(diagnostics_table(standard_features(ds.parts), empty)) == 10
        assert len(diagnostics_table(standard_features(ds.parts), None)) == 10

    def test_lognormal_direction(self):
        ds = generate_synthetic(11, 5000)
        table = diagnostics_table(standard_features(ds.parts), full_plr_matrix(ds.parts))
        std = max(abs(r.skewness) for r in table.rows[:10])
        comp = max(abs(r.skewness) for r in table.rows[10:])
        assert comp < std / 5
