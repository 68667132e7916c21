"""Exit criteria.  Each test carries an ``acceptance`` marker and the run
ends with one PASS/FAIL line per criterion."""

import json
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coda_bankruptcy.coda import (
    FULL_PLR_EDGES,
    PARTS,
    SPANNING_GRAPH,
    PlrGraph,
    clr,
    full_plr_features,
    spanning_plr_features,
    validate_spanning_plr,
)
from coda_bankruptcy.diagnostics import diagnostics_table, excess_kurtosis
from coda_bankruptcy.evaluation import ConfusionMatrix, ExperimentConfig, downsample, metrics, run_experiment_grid, split
from coda_bankruptcy.features import clr_matrix, full_plr_matrix, spanning_features, standard_features
from coda_bankruptcy.ingest import Dataset
from coda_bankruptcy.models.forest import fit_forest, variable_importance
from coda_bankruptcy.models.knn import DEFAULT_K_GRID, build_knn, knn_classify
from coda_bankruptcy.models.logistic import fit_logistic, predict_logistic, score
from coda_bankruptcy.synthetic import generate_synthetic

from .oracles import grid_search_logit

ALT_GRAPH = PlrGraph((("CA", "NCA"), ("RE", "NCA"), ("NCL", "RE"), ("CL", "OE"), ("OR", "CL"), ("OE", "NCA")))


@pytest.mark.acceptance(1, "structural counts: 21 plr, 6 spanning plr, 6 grid rows")
def test_structural_counts():
    x = np.exp(np.random.default_rng(1).normal(size=(3, 7)))
    assert full_plr_features(x).shape == (3, 21)
    assert spanning_plr_features(x).shape == (3, 6)
    assert len(FULL_PLR_EDGES) == len(PARTS) * (len(PARTS) - 1) // 2
    ds = generate_synthetic(0, 800, 0.1, {"log(OR/OE)": 2.0})
    result = run_experiment_grid(ds, ExperimentConfig(seed=0, n_trees=10))
    assert len(result.reports) == 6


@pytest.mark.acceptance(2, "graph rule: spanning set valid, 7-edge supersets and disconnected sets rejected")
def test_graph_rule():
    base = SPANNING_GRAPH.edges
    assert validate_spanning_plr(SPANNING_GRAPH)
    extra = [e for e in FULL_PLR_EDGES if frozenset(e) not in {frozenset(b) for b in base}]
    assert len(extra) == 15
    for e in extra:
        result = validate_spanning_plr(PlrGraph((*base, e)))
        assert not result and "too many edges" in result.message()
    # every 6-subset of the 21 pairs that leaves some part unreached
    rng = np.random.default_rng(0)
    disconnected = 0
    for _ in range(2000):
        pick = [FULL_PLR_EDGES[i] for i in rng.choice(21, 6, replace=False)]
        touched = {p for e in pick for p in e}
        if len(touched) < 7:
            disconnected += 1
            assert not validate_spanning_plr(PlrGraph(tuple(pick)))
    assert disconnected > 100
    # a 6-edge set touching all parts but holding a cycle is also disconnected
    cyc = (("NCA", "CA"), ("CA", "RE"), ("RE", "NCA"), ("NCL", "CL"), ("CL", "OR"), ("OR", "OE"))
    assert "not connected" in validate_spanning_plr(PlrGraph(cyc)).message()


@pytest.mark.acceptance(3, "distance coherence: 21-plr distance = sqrt(7) x clr distance")
def test_distance_coherence():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    a = np.exp(rng.normal(0, 2, size=(1000, 7)))
    b = np.exp(rng.normal(0, 2, size=(1000, 7)))
    d_plr = np.linalg.norm(full_plr_features(a) - full_plr_features(b), axis=1)
    d_clr = np.linalg.norm(clr(a) - clr(b), axis=1)
    np.testing.assert_allclose(d_plr, np.sqrt(7) * d_clr, rtol=1e-9, atol=0)
    assert time.perf_counter() - start < 1


@pytest.mark.acceptance(4, "plr-choice invariance of logistic probabilities")
def test_plr_choice_invariance():
    start = time.perf_counter()
    assert ALT_GRAPH.validate()
    assert set(map(frozenset, ALT_GRAPH.edges)) != set(map(frozenset, SPANNING_GRAPH.edges))
    ds = generate_synthetic(4, 500, 0.2, {"log(RE/NCL)": 1.5, "log(NCA/CA)": -1.0})
    fits = [fit_logistic(spanning_features(ds.parts, ds.labels, graph=g)) for g in (SPANNING_GRAPH, ALT_GRAPH)]
    probs = [predict_logistic(m, spanning_features(ds.parts, graph=g))[1] for m, g in zip(fits, (SPANNING_GRAPH, ALT_GRAPH))]
    assert np.max(np.abs(probs[0] - probs[1])) < 1e-6
    assert time.perf_counter() - start < 10


@pytest.mark.acceptance(5, "logistic oracle: IRLS matches grid maximisation, score < 1e-6")
def test_logistic_oracle():
    start = time.perf_counter()
    xs = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.5]
    ys = [0, 0, 1, 0, 1, 0, 1, 1]
    b0, b1 = grid_search_logit(xs, ys)
    model = fit_logistic(np.array(xs), np.array(ys))
    assert abs(model.intercept - b0) < 1e-3
    assert abs(model.coefficients[0] - b1) < 1e-3
    design = np.column_stack([np.ones(8), xs])
    beta = np.array([model.intercept, model.coefficients[0]])
    assert np.max(np.abs(score(beta, design, np.array(ys, float)))) < 1e-6
    assert time.perf_counter() - start < 5


@pytest.mark.acceptance(6, "kNN coherence: 21-plr and clr labels equal for every k")
def test_knn_coherence():
    start = time.perf_counter()
    ds = generate_synthetic(6, 200, 0.3, {"log(OR/OE)": 2.0})
    train, valid = split(ds, 0.7, seed=6)
    for k in DEFAULT_K_GRID:
        a = knn_classify(build_knn(full_plr_matrix(train.parts, train.labels), k=k), full_plr_matrix(valid.parts))
        b = knn_classify(build_knn(clr_matrix(train.parts, train.labels), k=k), clr_matrix(valid.parts))
        np.testing.assert_array_equal(a, b, err_msg=f"k={k}")
    assert time.perf_counter() - start < 5


@pytest.mark.acceptance(7, "forest determinism and mtry defaults 4 / 7")
def test_forest_determinism():
    ds = generate_synthetic(7, 1000, 0.2, {"log(RE/NCL)": 2.0})
    std = standard_features(ds.parts, ds.labels)
    plr = full_plr_matrix(ds.parts, ds.labels)
    start = time.perf_counter()
    a = fit_forest(plr, n_trees=100, seed=11)
    elapsed = time.perf_counter() - start
    b = fit_forest(plr, n_trees=100, seed=11)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a.mtry == 7
    assert fit_forest(std, n_trees=1).mtry == 4
    assert elapsed < 30


@pytest.mark.acceptance(8, "metric identities: balanced accuracy = mean of sensitivity and specificity")
@settings(max_examples=500, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(1, 10_000), st.integers(1, 10_000))
def test_metric_identities(tp, fp, tn_plus_fp, tp_plus_fn):
    cm = ConfusionMatrix(tp=min(tp, tp_plus_fn), fp=min(fp, tn_plus_fp), tn=tn_plus_fp - min(fp, tn_plus_fp), fn=tp_plus_fn - min(tp, tp_plus_fn))
    r = metrics(cm)
    assert r.balanced_accuracy == (r.sensitivity + r.specificity) / 2
    exact = (Fraction(100 * cm.tp, cm.tp + cm.fn) + Fraction(100 * cm.tn, cm.tn + cm.fp)) / 2
    assert r.balanced_accuracy == pytest.approx(float(exact), rel=1e-14)
    # published spot checks
    assert Fraction(82 + 66, 2) == 74
    assert Fraction(89 + 65, 2) == 77


@pytest.mark.acceptance(9, "protocol fidelity: 21,791 / 9,340 split, 1:1 training, untouched validation")
def test_protocol_fidelity():
    start = time.perf_counter()
    base = generate_synthetic(9, 31_131, 0.01)
    labels = np.zeros(31_131, dtype=bool)
    labels[np.random.default_rng(9).choice(31_131, 97, replace=False)] = True
    ds = Dataset(base.ids, base.parts, labels)
    train, valid = split(ds, 0.7, seed=9)
    assert (len(train), len(valid)) == (21_791, 9_340)
    assert train.n_bankrupt + valid.n_bankrupt == 97
    down = downsample(train, seed=10)
    assert down.n_bankrupt == down.n_healthy == train.n_bankrupt
    result = run_experiment_grid(ds, ExperimentConfig(seed=9, methods=("logit",)))
    counts = result.split_counts
    assert counts["train"]["n"] == 21_791 and counts["valid"]["n"] == 9_340
    assert counts["train_downsampled"]["bankrupt"] == counts["train_downsampled"]["healthy"]
    for r in result.reports:
        assert r.confusion.tp + r.confusion.fn == counts["valid"]["bankrupt"]
        assert r.confusion.tn + r.confusion.fp == counts["valid"]["healthy"]
    assert time.perf_counter() - start < 5


@pytest.mark.acceptance(10, "end-to-end recovery of a single strong log-ratio signal")
def test_signal_recovery():
    start = time.perf_counter()
    signal = "log(RE/NCL)"
    top3 = 0
    for s in range(10):
        ds = generate_synthetic(100 + s, 5000, 0.03, {signal: 6.0})
        result = run_experiment_grid(ds, ExperimentConfig(seed=s, methods=("logit", "rf"), feature_sets=("compositional",)))
        for method in ("logit", "rf"):
            r = result.cell(method, "compositional").report
            assert r.sensitivity >= 90, (s, method, r.sensitivity)
            assert r.specificity >= 80, (s, method, r.specificity)
        forest = result.cell("rf", "compositional").model
        top3 += signal in [name for name, _ in variable_importance(forest, 3)]
    assert top3 >= 9
    assert time.perf_counter() - start < 120


@pytest.mark.acceptance(11, "diagnostics direction: standard ratios more kurtotic than log-ratios")
def test_diagnostics_direction():
    start = time.perf_counter()
    ds = generate_synthetic(11, 5000, 0.03)
    table = diagnostics_table(standard_features(ds.parts), full_plr_matrix(ds.parts))
    std = [abs(r.kurtosis) for r in table.rows[:10] if r.kurtosis is not None]
    plr = [abs(r.kurtosis) for r in table.rows[10:] if r.kurtosis is not None]
    assert len(std) == 10 and len(plr) == 21
    assert max(std) > max(plr)
    # cross-check one entry against the direct estimator
    assert table.rows[10].kurtosis == excess_kurtosis(full_plr_matrix(ds.parts).values[:, 0]).value
    assert time.perf_counter() - start < 10
