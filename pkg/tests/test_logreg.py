import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from eegdecode.errors import ConfigError, DataError
from eegdecode.logreg import (FitConfig, LogRegModel, fit, nonzero_support, objective,
                              oversample_minority, predict_proba, sigmoid, smooth_grad, smooth_loss,
                              soft_threshold)
from eegdecode.stats import auc

from oracles import brute_force_l1_logistic


def logistic_problem(rng, n=20, d=2, scale=1.5):
    X = rng.standard_normal((n, d))
    w = rng.normal(0, scale, d)
    y = (rng.random(n) < 1 / (1 + np.exp(-X @ w))).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


def test_large_lambda_gives_prevalence_intercept(rng):
    X, y = logistic_problem(rng, n=40, d=5)
    m = fit(X, y, FitConfig(lam=1e6))
    assert np.all(m.weights == 0.0)
    p = y.mean()
    assert abs(m.intercept - np.log(p / (1 - p))) < 1e-6
    assert not nonzero_support(m).any()


def test_separable_1d():
    x = np.linspace(-2, 2, 20)
    x = x[x != 0][:, None]
    y = (x[:, 0] > 0).astype(int)
    m = fit(x, y, FitConfig(lam=0.1))
    assert m.weights[0] > 0
    assert auc(predict_proba(m, x), y) == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_objective_matches_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    X, y = logistic_problem(rng)
    lam = float(rng.uniform(0.01, 0.3))
    m = fit(X, y, FitConfig(lam=lam, standardize=False, tol=1e-10, max_iter=20000))
    best, _ = brute_force_l1_logistic(X, y, lam)
    assert abs(objective(m.weights, m.intercept, X, y, lam) - best) < 1e-5


def test_gradient_against_finite_differences(rng):
    X, y = logistic_problem(rng, n=15, d=4)
    w = rng.standard_normal(4)
    b = 0.3
    gw, gb = smooth_grad(w, b, X, y)
    h = 1e-5
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fd = (smooth_loss(w + e, b, X, y) - smooth_loss(w - e, b, X, y)) / (2 * h)
        assert abs(fd - gw[j]) <= 1e-6 * max(abs(fd), 1e-3)
    fd_b = (smooth_loss(w, b + h, X, y) - smooth_loss(w, b - h, X, y)) / (2 * h)
    assert abs(fd_b - gb) <= 1e-6 * max(abs(fd_b), 1e-3)


@given(arrays(np.float64, 8, elements=st.floats(-10, 10)), st.floats(0, 5))
def test_soft_threshold_exact_zeros(v, thr):
    out = soft_threshold(v, thr)
    small = np.abs(v) <= thr
    assert np.all(out[small] == 0.0)
    np.testing.assert_allclose(out[~small], v[~small] - np.sign(v[~small]) * thr)


@pytest.mark.parametrize("standardize", [False, True])
def test_objective_monotone(rng, standardize):
    X, y = logistic_problem(rng, n=60, d=10)
    m = fit(X, y, FitConfig(lam=0.05, standardize=standardize), record_history=True)
    assert m.history is not None and len(m.history) >= 2
    assert np.all(np.diff(m.history) <= 1e-12)


@given(st.floats(0.01, 100))
def test_argmax_invariant_to_rescaling(scale):
    rng = np.random.default_rng(7)
    X, y = logistic_problem(rng, n=40, d=4)
    a = predict_proba(fit(X, y), X) > 0.5
    b = predict_proba(fit(X * scale, y), X * scale) > 0.5
    assert np.array_equal(a, b)


def test_deterministic(rng):
    X, y = logistic_problem(rng, n=30, d=6)
    cfg = FitConfig(init_jitter=0.01, oversample=True, rng_seed=3)
    a, b = fit(X, y, cfg), fit(X, y, cfg)
    assert a.weights.tobytes() == b.weights.tobytes() and a.intercept == b.intercept


def test_predict_proba_edges():
    zero = LogRegModel(np.zeros(3), 0.0, 0.1, 0, True)
    assert np.all(predict_proba(zero, np.ones((4, 3))) == 0.5)
    with np.errstate(over="raise", invalid="raise"):
        np.testing.assert_array_equal(sigmoid([1000.0, -1000.0]), [1.0, 0.0])
    with pytest.raises(DataError):
        predict_proba(zero, np.ones((2, 4)))


def test_predict_proba_high_precision(rng):
    w, b = rng.standard_normal(5) * 3, 0.7
    X = rng.standard_normal((30, 5)) * 4
    m = LogRegModel(w, b, 0.0, 0, True)
    mpmath.mp.dps = 50
    oracle = [float(1 / (1 + mpmath.exp(-(mpmath.fsum(mpmath.mpf(float(a)) * mpmath.mpf(float(c))
                                                        for a, c in zip(x, w)) + b)))) for x in X]
    np.testing.assert_allclose(predict_proba(m, X), oracle, rtol=1e-12, atol=1e-15)


def test_lambda_zero_full_support(rng):
    X, y = logistic_problem(rng, n=50, d=4, scale=0.5)
    m = fit(X, y, FitConfig(lam=0.0))
    dump = json.loads(m.to_json())
    assert nonzero_support(m).tolist() == [w != 0.0 for w in dump["weights"]]
    assert nonzero_support(m).all()


def test_model_dump_round_trip(rng):
    X, y = logistic_problem(rng)
    m = fit(X, y)
    back = LogRegModel.from_dict(json.loads(m.to_json()))
    assert back.weights.tolist() == m.weights.tolist()
    assert set(m.to_dict()) == {"weights", "intercept", "lambda", "converged", "n_iter_run"}


def test_input_errors():
    with pytest.raises(DataError):
        fit(np.ones((4, 2)), [1, 1, 1, 1])
    with pytest.raises(DataError):
        fit(np.array([[np.nan], [1.0]]), [0, 1])
    with pytest.raises(DataError):
        fit(np.ones((1, 2)), [1])
    with pytest.raises(ConfigError):
        FitConfig(lam=-1)
    with pytest.raises(ConfigError):
        FitConfig(max_iter=0)
    with pytest.raises(ConfigError):
        FitConfig(tol=0)


def test_oversample_balances(rng):
    X = rng.standard_normal((10, 2))
    y = np.array([1, 1, 0, 0, 0, 0, 0, 0, 0, 0])
    Xo, yo = oversample_minority(X, y, rng)
    assert (yo == 1).sum() == (yo == 0).sum() == 8
    # duplicates only
    originals = {tuple(r) for r in X[y == 1]}
    assert all(tuple(r) in originals for r in Xo[yo == 1])


def test_convergence_flag(rng):
    X, y = logistic_problem(rng, n=50, d=5)
    assert not fit(X, y, FitConfig(max_iter=1)).converged
    m = fit(X, y)
    assert m.converged and m.n_iter_run < 2000
