import json
import math

import numpy as np
import pytest

from evalpulse.core import load_dataset
from evalpulse.dualreg import LogLogPoints, fit_single_knot
from evalpulse.inference import fit_linear, fit_logistic
from evalpulse.synthgen import (
    LINEAR_PRESETS,
    LOGISTIC_PRESETS,
    SynthConfig,
    dual_regime_curve,
    dual_regime_log_points,
    gen_dual_regime,
    gen_emotion_effect,
    gen_lognormal_counts,
    gibrat_growth,
    synthesize,
    truth_path,
    write_synth,
)

KNOT = math.log(131)


def test_lognormal_degenerate_sigma():
    assert np.all(gen_lognormal_counts(1000, math.log(5), 1e-9, seed=0) == 5)


def test_lognormal_mean_of_logs():
    counts = gen_lognormal_counts(100_000, 5.492, 2.28, seed=0)
    assert np.log(counts).mean() == pytest.approx(5.492, abs=0.03)
    assert counts.min() >= 1


def test_lognormal_deterministic():
    a = gen_lognormal_counts(500, 2.0, 1.0, seed=42)
    b = gen_lognormal_counts(500, 2.0, 1.0, seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_lognormal_counts(500, 2.0, 1.0, seed=43))


def test_lognormal_rejects_bad_sigma():
    with pytest.raises(ValueError):
        gen_lognormal_counts(10, 1.0, 0.0, seed=0)


def test_gibrat_single_tiny_step():
    assert np.all(gibrat_growth(1000, 1, 1e-12, seed=0, initial=1.0) == 1)


def test_gibrat_log_variance():
    out = gibrat_growth(100_000, 100, 0.2, seed=0)
    assert np.var(np.log(out)) == pytest.approx(100 * 0.2**2, rel=0.05)


def test_dual_regime_noiseless_points_on_line():
    x, y = dual_regime_log_points(5000, KNOT, 0.29, 0.93, 3.5, 0.0, 5.492, 2.28, seed=1)
    assert np.array_equal(y, dual_regime_curve(x, KNOT, 0.29, 0.93, 3.5))
    # knots are searched over observed x, so the planted one is usually off-grid
    fit = fit_single_knot(LogLogPoints(x, y))
    assert fit.rss / fit.n < 1e-8
    assert fit.lambda_ == pytest.approx(0.29, abs=1e-3) and fit.gamma == pytest.approx(0.93, abs=1e-3)
    # with an observation at the planted knot the fit is exact
    x = np.append(x, KNOT)
    fit = fit_single_knot(LogLogPoints(x, dual_regime_curve(x, KNOT, 0.29, 0.93, 3.5)))
    assert fit.rss < 1e-6 and fit.knot == KNOT


def test_dual_regime_dataset_matches_points():
    ds = gen_dual_regime(2000, seed=3)
    x, y = dual_regime_log_points(2000, KNOT, 0.29, 0.93, 3.5, 0.5, 5.492, 2.28, seed=3)
    likes = np.array([it.likes for it in ds])
    assert np.array_equal(likes, np.maximum(np.rint(np.exp(x)), 1))
    assert all(it.dislikes >= 1 for it in ds)


def test_dual_regime_recovery_small():
    ds = gen_dual_regime(20_000, seed=2)
    pts = LogLogPoints(np.log([it.likes for it in ds]), np.log([it.dislikes for it in ds]))
    fit = fit_single_knot(pts)
    assert fit.knot == pytest.approx(KNOT, abs=0.15)
    assert fit.lambda_ == pytest.approx(0.29, abs=0.03)
    assert fit.gamma == pytest.approx(0.93, abs=0.03)


def test_emotion_effect_null_logistic():
    X, y = gen_emotion_effect(20_000, "logistic", [0.2, 0.0, 0.0], seed=5)
    res = fit_logistic(X, y)
    assert all(abs(t.estimate) <= 3 * t.std_error for t in res.terms[1:])


@pytest.mark.parametrize("kind, presets, noise", [("logistic", LOGISTIC_PRESETS, 0.0), ("linear", LINEAR_PRESETS, 0.5)])
def test_emotion_effect_preset_recovery(kind, presets, noise):
    coefs = presets["VA"]["youtube"]
    X, y = gen_emotion_effect(100_000, kind, coefs, noise_sd=noise, seed=6)
    fitter = fit_logistic if kind == "logistic" else fit_linear
    res = fitter(X, y)
    for t, c in zip(res.terms, coefs):
        assert abs(t.estimate - c) <= 3 * t.std_error


def test_emotion_effect_shapes():
    X, y = gen_emotion_effect(10, "linear", [1.0, 2.0, 3.0])
    assert X.shape == (10, 2) and y.shape == (10,)
    assert np.allclose(y, 1 + X @ [2.0, 3.0])
    with pytest.raises(ValueError):
        gen_emotion_effect(10, "probit", [1.0])


@pytest.mark.parametrize("kind", ["dual_regime", "lognormal", "gibrat"])
def test_write_synth_round_trip(tmp_path, kind):
    ds, truth = synthesize(SynthConfig(kind=kind, n=300, seed=4, steps=10))
    path, sidecar = write_synth(ds, truth, tmp_path / "s.jsonl")
    assert sidecar == truth_path(path)
    back = load_dataset(path)
    assert [(i.id, i.text, i.likes, i.dislikes, i.created_at) for i in back] == [
        (i.id, i.text, i.likes, i.dislikes, i.created_at) for i in ds
    ]
    assert json.loads(sidecar.read_text())["kind"] == kind


@pytest.mark.parametrize("bad", [dict(n=0), dict(noise_sd=-1.0), dict(preset="myspace"), dict(kind="zipf")])
def test_synth_config_validation(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)
