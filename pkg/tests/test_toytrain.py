import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gazecal.metrics import coverage_curve, cpe, gaussian_quantile_function
from gazecal.toytrain import (
    HeteroscedasticRegressor,
    QuantilePairRegressor,
    TrainConfig,
    make_toy_data,
    mean_nll,
    nll_gradient,
    nll_loss,
    pinball_loss,
    smooth_l1,
    train_hetero,
    train_quantile_baseline,
)

from oracles import central_difference_gradient, random_gradient_configs, relative_error


def test_smooth_l1_examples():
    assert smooth_l1(0.0) == 0.0
    assert smooth_l1(0.5) == 0.125
    assert smooth_l1(2.0) == 1.5
    assert smooth_l1(-2.0) == 1.5
    np.testing.assert_allclose(smooth_l1(np.array([-0.5, 1.0])), [0.125, 0.5])


def test_nll_examples():
    assert nll_loss(0.3, 0.0, 0.3) == 0.0
    # residual chosen so that the smooth-L1 term equals e**2
    r = math.e ** 2 + 0.5
    assert smooth_l1(r) == pytest.approx(math.e ** 2)
    assert nll_loss(r, 2.0, 0.0) == pytest.approx(1.5)


@given(st.floats(1e-4, 3.0))
def test_nll_stationary_at_variance_equal_to_error_term(r):
    l_n = smooth_l1(r)
    s_star = math.log(l_n)
    f = lambda s: nll_loss(r, s, 0.0)
    h = 1e-4
    # derivative vanishes and both neighbours are higher
    assert abs((f(s_star + h) - f(s_star - h)) / (2 * h)) < 1e-6
    assert f(s_star) <= f(s_star + 1e-2) and f(s_star) <= f(s_star - 1e-2)


def test_pinball_examples():
    assert pinball_loss(0.4, 0.4, 0.3) == 0.0
    assert pinball_loss(0.0, 1.0, 0.975) == pytest.approx(0.975)
    assert pinball_loss(1.0, 0.0, 0.975) == pytest.approx(0.025)
    for tau in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            pinball_loss(0.0, 1.0, tau)


def test_gradient_matches_finite_differences():
    for w_mu, w_s, X, y in random_gradient_configs(100, seed=1):
        g_mu, g_s = nll_gradient(w_mu, w_s, X, y)
        fd_mu = central_difference_gradient(lambda w: mean_nll(w, w_s, X, y), w_mu)
        fd_s = central_difference_gradient(lambda w: mean_nll(w_mu, w, X, y), w_s)
        assert relative_error(g_mu, fd_mu).max() < 1e-4
        assert relative_error(g_s, fd_s).max() < 1e-4


def test_gradient_at_exact_means():
    gen = np.random.default_rng(0)
    X = gen.uniform(-1, 1, (32, 3))
    w_mu = gen.normal(size=(2, 4))
    # same product as the model so residuals are exactly zero
    y = np.hstack([np.ones((32, 1)), X]) @ w_mu.T
    g_mu, g_s = nll_gradient(w_mu, np.zeros((2, 4)), X, y)
    np.testing.assert_array_equal(g_mu, 0.0)
    assert np.all(g_s[:, 0] == 0.5)
    np.testing.assert_allclose(g_s[:, 1:], 0.5 * X.mean(axis=0)[None, :].repeat(2, axis=0))


def test_duplicated_batch_gives_same_gradient():
    w_mu, w_s, X, y = next(random_gradient_configs(1, seed=4))
    a = nll_gradient(w_mu, w_s, X, y)
    b = nll_gradient(w_mu, w_s, np.vstack([X, X]), np.vstack([y, y]))
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-13, atol=1e-15)


def test_recovers_mean_weights():
    data = make_toy_data(5000, d=3, seed=0)
    model = train_hetero(data.X, data.y)
    assert np.max(np.abs(model.mean_weights_ - data.mean_weights)) < 0.05


def test_recovers_log_variance_slope():
    c = 0.8
    data = make_toy_data(10_000, d=2, seed=1, hetero_slope=c)
    model = train_hetero(data.X, data.y)
    np.testing.assert_allclose(model.logvar_weights_[:, 1], c, atol=0.1)


def test_zero_learning_rate_is_a_no_op():
    data = make_toy_data(200, seed=2)
    model = train_hetero(data.X, data.y, TrainConfig(learning_rate=0.0, iterations=50))
    np.testing.assert_array_equal(model.mean_weights_, 0.0)
    np.testing.assert_allclose(model.logvar_weights_[:, 0], np.log(np.var(data.y, axis=0)))
    np.testing.assert_array_equal(model.logvar_weights_[:, 1:], 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_loss_non_increasing_at_small_lr(seed):
    data = make_toy_data(500, seed=seed)
    model = HeteroscedasticRegressor(learning_rate=1e-3, n_iter=400).fit(data.X, data.y)
    assert np.all(np.diff(model.loss_curve_) <= 1e-12)


def test_overconfidence_on_shifted_domain():
    train = make_toy_data(2500, seed=0)
    shifted = make_toy_data(2500, seed=0, noise_multiplier=2.0, stream=1)
    model = train_hetero(train.X, train.y)
    pset = model.to_prediction_set(shifted.X, shifted.y)
    qf = gaussian_quantile_function(pset)
    for ind in ("joint", "pitch", "yaw"):
        assert cpe(coverage_curve(pset, qf, ind)).cpe > 0.1


def test_quantile_heads_match_empirical_quantiles():
    data = make_toy_data(10_000, d=2, seed=3, mean_weights=np.zeros((2, 3)))
    model = train_quantile_baseline(data.X, data.y)
    lo, hi = model.predict(data.X)
    q_lo = np.quantile(data.y, 0.025, axis=0)
    q_hi = np.quantile(data.y, 0.975, axis=0)
    assert np.max(np.abs(lo - q_lo)) < 0.02
    assert np.max(np.abs(hi - q_hi)) < 0.02
    assert model.meta_["crossed"] is False


def test_crossed_quantiles_are_flagged_not_fixed():
    gen = np.random.default_rng(0)
    X = gen.uniform(-1, 1, (12, 5))
    y = gen.normal(0, 1, (12, 2))
    model = QuantilePairRegressor(0.45, 0.55, learning_rate=0.05, n_iter=2000).fit(X, y)
    lo, hi = model.predict(X)
    assert model.meta_["crossed"] is True
    assert np.any(lo > hi)
    np.testing.assert_allclose(model.meta_["crossing_fraction"], (lo > hi).mean(axis=0))


def test_training_is_deterministic():
    data = make_toy_data(300, seed=5)
    a = train_quantile_baseline(data.X, data.y, TrainConfig(iterations=300))
    b = train_quantile_baseline(data.X, data.y, TrainConfig(iterations=300))
    np.testing.assert_array_equal(a.weights_, b.weights_)
    h1 = train_hetero(data.X, data.y, TrainConfig(iterations=300))
    h2 = train_hetero(data.X, data.y, TrainConfig(iterations=300))
    np.testing.assert_array_equal(h1.logvar_weights_, h2.logvar_weights_)
    np.testing.assert_array_equal(make_toy_data(50, seed=9).y, make_toy_data(50, seed=9).y)


def test_degenerate_data_rejected():
    with pytest.raises(ValueError):
        train_hetero(np.zeros((3, 3)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        train_quantile_baseline(np.zeros((10, 2)), np.zeros((9, 2)))
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(full_batch=False)
