import math
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evalpulse.core import EvaluationDataset, Item
from evalpulse.dualreg import (
    LogLogPoints,
    RegimeLabel,
    RegressionError,
    analyze_dual_regime,
    classify_regime,
    fit_ols,
    fit_single_knot,
    gcv,
    global_mask,
    hist2d_loglog,
    kfold_cv_error,
    to_loglog,
)
from evalpulse.rng import stream
from evalpulse.synthgen import dual_regime_curve, dual_regime_log_points, gen_dual_regime

from conftest import AS_OF

KNOT = math.log(131)


def dataset(pairs):
    return EvaluationDataset(
        [Item(str(i), "x", l, d, AS_OF - timedelta(days=400)) for i, (l, d) in enumerate(pairs)]
    )


def test_to_loglog_values():
    pts = to_loglog(dataset([(1, 1), (round(math.e**2), round(math.e))]))
    assert pts.x[0] == 0.0 and pts.y[0] == 0.0
    pts = LogLogPoints(np.log([math.e**2]), np.log([math.e]))
    assert pts.x[0] == pytest.approx(2.0) and pts.y[0] == pytest.approx(1.0)


def test_to_loglog_rejects_zero():
    with pytest.raises(RegressionError, match="zero count"):
        to_loglog(dataset([(3, 0), (2, 2)]))


def test_gcv_arithmetic():
    assert gcv(10, 100, 5) == pytest.approx(10 / (100 * 0.95**2))
    assert gcv(10, 100, 5) == pytest.approx(0.110803, abs=1e-6)
    assert gcv(0, 50, 5) == 0.0
    with pytest.raises(ValueError):
        gcv(5, 4, 4)


def test_ols_exact_line():
    x = np.linspace(0, 5, 30)
    fit = fit_ols(LogLogPoints(x, 2 * x + 1))
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(1.0, abs=1e-12)
    assert fit.rss == pytest.approx(0.0, abs=1e-20)
    assert fit.r2 == pytest.approx(1.0)


def test_ols_needs_three_points():
    with pytest.raises(RegressionError):
        fit_ols(LogLogPoints([0.0, 1.0], [0.0, 1.0]))


def test_ols_noisy_slope():
    rng = stream(2, "ols")
    x = rng.uniform(0, 8, 10_000)
    fit = fit_ols(LogLogPoints(x, 0.7 * x + 0.3 + rng.normal(0, 0.5, x.size)))
    assert fit.slope == pytest.approx(0.7, abs=0.02)


def test_single_knot_noiseless():
    x = np.sort(np.append(np.linspace(0.0, 12.0, 2001), KNOT))
    y = dual_regime_curve(x, KNOT, 0.29, 0.93, 3.5)
    fit = fit_single_knot(LogLogPoints(x, y))
    assert fit.knot == KNOT
    assert fit.lambda_ == pytest.approx(0.29, abs=1e-9)
    assert fit.gamma == pytest.approx(0.93, abs=1e-9)
    assert fit.rss == pytest.approx(0.0, abs=1e-12)
    assert fit.alpha2 == -fit.lambda_ and fit.alpha1 == fit.gamma


def test_single_knot_collinear():
    x = np.linspace(0.0, 10.0, 200)
    fit = fit_single_knot(LogLogPoints(x, 0.5 * x))
    assert fit.alpha1 == pytest.approx(0.5, abs=1e-9)
    assert fit.alpha2 == pytest.approx(-0.5, abs=1e-9)
    assert fit.rss == pytest.approx(0.0, abs=1e-12)
    # with any noise the knot's extra parameters are penalized
    y = 0.5 * x + stream(4, "collinear").normal(0, 0.1, x.size)
    pts = LogLogPoints(x, y)
    assert fit_single_knot(pts).gcv > fit_ols(pts).gcv


def test_single_knot_needs_twenty_points():
    x = np.arange(10.0)
    with pytest.raises(RegressionError):
        fit_single_knot(LogLogPoints(x, x))


def test_single_knot_insufficient_spread():
    x = np.array([0.0] * 5 + [1.0] * 30 + [2.0] * 5)
    with pytest.raises(RegressionError, match="insufficient spread"):
        fit_single_knot(LogLogPoints(x, x))


def brute_force_knot(x, y, min_side):
    best = None
    for c in np.unique(x):
        if np.sum(x < c) < min_side or np.sum(x > c) < min_side:
            continue
        design = np.column_stack([np.ones(x.size), np.maximum(0, x - c), np.maximum(0, c - x)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        rss = float(np.sum((y - design @ coef) ** 2))
        if best is None or rss < best[0] - 1e-9 * max(1.0, rss):
            best = (rss, c)
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(20, 120))
def test_knot_search_matches_brute_force(seed, n):
    rng = stream(seed, "brute")
    x = np.round(rng.uniform(0, 6, n), 1)
    y = dual_regime_curve(x, 3.0, 0.3, 0.9, 1.0) + rng.normal(0, 0.3, n)
    pts = LogLogPoints(x, y)
    expected = brute_force_knot(x, y, max(10, math.ceil(0.05 * n)))
    if expected is None:
        with pytest.raises(RegressionError):
            fit_single_knot(pts)
        return
    fit = fit_single_knot(pts)
    rss, _ = expected
    assert fit.rss == pytest.approx(rss, rel=1e-7, abs=1e-9)
    design = np.column_stack([np.ones(n), np.maximum(0, x - fit.knot), np.maximum(0, fit.knot - x)])
    assert np.allclose(fit.predict(x), design @ np.array([fit.intercept, fit.alpha1, fit.alpha2]))


def test_cv_noiseless_line():
    x = np.linspace(0, 5, 100)
    assert kfold_cv_error(LogLogPoints(x, 3 * x - 1), "ols") <= 1e-12


def test_cv_deterministic():
    pts = dual_regime_log_points(2000, KNOT, 0.29, 0.93, 3.5, 0.5, 5.492, 2.28, seed=9)
    pts = LogLogPoints(*pts)
    assert kfold_cv_error(pts, "single_knot", seed=4) == kfold_cv_error(pts, "single_knot", seed=4)


def test_classify_regime():
    fit = fit_single_knot(LogLogPoints(np.linspace(0, 12, 300), dual_regime_curve(np.linspace(0, 12, 300), KNOT, 0.29, 0.93, 3.5)))
    lc = fit.Lc
    d_lc = math.exp(fit.d_at_lc)
    assert classify_regime(Item("a", "", math.ceil(lc * 2), math.ceil(d_lc * 2)), fit) is RegimeLabel.GLOBAL
    assert classify_regime(Item("b", "", math.ceil(lc * 2), 1), fit) is RegimeLabel.LOCAL
    assert classify_regime(Item("c", "", 1, math.ceil(d_lc * 10)), fit) is RegimeLabel.LOCAL


def test_classify_boundary_is_local():
    x = np.log(np.arange(1, 401, dtype=float))
    y = dual_regime_curve(x, math.log(131), 0.29, 0.93, 3.5)
    fit = fit_single_knot(LogLogPoints(x, y))
    assert fit.Lc == pytest.approx(131.0)
    item = Item("edge", "", round(fit.Lc), 10**6)
    assert classify_regime(item, fit) is RegimeLabel.LOCAL


def test_hist2d_single_point():
    h = hist2d_loglog(LogLogPoints([1.0], [2.0]))
    assert h.counts.shape == (50, 50)
    assert h.counts.sum() == 1 and np.count_nonzero(h.counts) == 1


def test_hist2d_marginals_match_1d():
    rng = stream(8, "hist")
    pts = LogLogPoints(rng.normal(5, 2, 100_000), rng.normal(3, 1, 100_000))
    h = hist2d_loglog(pts)
    assert h.counts.sum() == 100_000
    one_d, _ = np.histogram(pts.x, bins=h.x_edges)
    assert np.array_equal(h.counts.sum(axis=1), one_d)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 20), st.floats(0, 20)), min_size=1, max_size=50))
def test_hist2d_counts_sum(pairs):
    x, y = zip(*pairs)
    assert hist2d_loglog(LogLogPoints(x, y), bins=7).counts.sum() == len(pairs)


def test_analyze_on_synthetic():
    ds = gen_dual_regime(20_000, seed=5)
    pts = to_loglog(ds)
    rep = analyze_dual_regime(pts, k=5)
    assert rep.confirmed
    assert rep.cv_dual < rep.cv_ols
    assert rep.n_local + rep.n_global == len(pts)
    assert rep.n_global == int(global_mask(pts, rep.dual).sum())
    d = rep.to_dict()
    assert d["dual"]["lambda"] == -d["dual"]["alpha2"]
    assert d["dual"]["Lc_display"] == round(math.exp(d["dual"]["knot"]))
