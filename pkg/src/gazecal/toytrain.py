"""Linear-feature heteroskedastic trainer and pinball-loss quantile baseline.

The heteroskedastic model has, per output component, a linear mean head and
a linear log-variance head over the input features. It is trained by
full-batch gradient descent on the Gaussian negative log-likelihood whose
error term is the smooth-L1 loss::

    nll = 0.5 * s + smooth_l1(mean - truth) / (2 * exp(s)),   s = log variance

Because ``smooth_l1(r) = r**2 / 2`` near zero, the stationary variance is
half the squared residual, so a model trained this way is overconfident by
roughly a factor sqrt(2) in standard deviation before calibration.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from gazecal import rng
from gazecal.predictions import PredictionSet, QuantileSet

__all__ = [
    "HeteroscedasticRegressor",
    "QuantilePairRegressor",
    "ToyData",
    "TrainConfig",
    "make_toy_data",
    "mean_nll",
    "nll_gradient",
    "nll_loss",
    "pinball_loss",
    "smooth_l1",
    "train_hetero",
    "train_quantile_baseline",
]


def smooth_l1(residual):
    """``0.5 r**2`` for ``|r| < 1``, else ``|r| - 0.5``."""
    r = np.asarray(residual, dtype=float)
    a = np.abs(r)
    out = np.where(a < 1.0, 0.5 * r * r, a - 0.5)
    return float(out) if np.ndim(residual) == 0 else out


def _smooth_l1_grad(r):
    return np.where(np.abs(r) < 1.0, r, np.sign(r))


def nll_loss(mean, log_variance, truth):
    """Per-sample heteroskedastic NLL with the smooth-L1 error term."""
    s = np.asarray(log_variance, dtype=float)
    out = 0.5 * s + smooth_l1(np.asarray(mean, dtype=float) - truth) / (2.0 * np.exp(s))
    scalar = np.ndim(mean) == 0 and np.ndim(log_variance) == 0 and np.ndim(truth) == 0
    return float(out) if scalar else out


def pinball_loss(pred, truth, tau: float):
    """Quantile loss at level ``tau``: ``tau * (y - q)`` above, ``(1 - tau) * (q - y)`` below."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must satisfy 0 < tau < 1, got {tau}")
    diff = np.asarray(truth, dtype=float) - np.asarray(pred, dtype=float)
    out = np.where(diff >= 0.0, diff * tau, -diff * (1.0 - tau))
    return float(out) if np.ndim(out) == 0 else out


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def mean_nll(mean_weights, logvar_weights, X, y) -> float:
    """Batch mean of the summed per-component NLL.

    Weight arrays have shape (k, d + 1), intercept first.
    """
    Z = _design(np.asarray(X, dtype=float))
    mu = Z @ np.asarray(mean_weights).T
    s = Z @ np.asarray(logvar_weights).T
    return float(np.mean(np.sum(nll_loss(mu, s, np.asarray(y, dtype=float)), axis=1)))


def _loss_and_grad(w_mu, w_s, Z, y):
    mu = Z @ w_mu.T
    s = Z @ w_s.T
    r = mu - y
    inv = np.exp(-s)
    l = smooth_l1(r)
    n = Z.shape[0]
    loss = float(np.sum(0.5 * s + 0.5 * l * inv) / n)
    g_mu = 0.5 * _smooth_l1_grad(r) * inv
    g_s = 0.5 - 0.5 * l * inv
    return loss, g_mu.T @ Z / n, g_s.T @ Z / n


def nll_gradient(mean_weights, logvar_weights, X, y):
    """Analytic gradient of :func:`mean_nll` as ``(d_mean_weights, d_logvar_weights)``."""
    Z = _design(np.asarray(X, dtype=float))
    _, g_mu, g_s = _loss_and_grad(np.asarray(mean_weights, dtype=float),
                                  np.asarray(logvar_weights, dtype=float), Z,
                                  np.asarray(y, dtype=float))
    return g_mu, g_s


def _check_Xy(X, y, min_extra: int = 2):
    X = check_array(X, dtype=np.float64)
    y = check_array(y, dtype=np.float64, ensure_2d=False)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y have inconsistent numbers of samples")
    if X.shape[0] < X.shape[1] + min_extra:
        raise ValueError(
            f"degenerate data: need at least d + {min_extra} = {X.shape[1] + min_extra} "
            f"samples, got {X.shape[0]}")
    return X, y


class HeteroscedasticRegressor(RegressorMixin, BaseEstimator):
    """Linear mean and log-variance heads trained on the smooth-L1 Gaussian NLL.

    Parameters
    ----------
    learning_rate : float, default=0.01
    n_iter : int, default=5000
        Number of full-batch gradient steps.
    """

    def __init__(self, learning_rate: float = 0.01, n_iter: int = 5000):
        self.learning_rate = learning_rate
        self.n_iter = n_iter

    def fit(self, X, y):
        X, y = _check_Xy(X, y)
        if self.learning_rate < 0 or self.n_iter < 0:
            raise ValueError("learning_rate and n_iter must be non-negative")
        k, d1 = y.shape[1], X.shape[1] + 1
        w_mu = np.zeros((k, d1))
        w_s = np.zeros((k, d1))
        w_s[:, 0] = np.log(np.maximum(np.var(y, axis=0), np.finfo(float).tiny))

        Z = _design(X)
        loss, g_mu, g_s = _loss_and_grad(w_mu, w_s, Z, y)
        best = (loss, w_mu.copy(), w_s.copy())
        losses = [loss]
        if self.learning_rate > 0:
            for _ in range(int(self.n_iter)):
                w_mu -= self.learning_rate * g_mu
                w_s -= self.learning_rate * g_s
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, g_mu, g_s = _loss_and_grad(w_mu, w_s, Z, y)
                if not math.isfinite(loss):
                    break
                losses.append(loss)
                if loss <= best[0]:
                    best = (loss, w_mu.copy(), w_s.copy())

        # never hand back a model worse than the initialisation
        self.loss_, self.mean_weights_, self.logvar_weights_ = best
        self.loss_curve_ = np.array(losses)
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = k
        return self

    def _heads(self, X):
        check_is_fitted(self, "mean_weights_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        Z = _design(X)
        return Z @ self.mean_weights_.T, Z @ self.logvar_weights_.T

    def predict(self, X) -> np.ndarray:
        return self._heads(X)[0]

    def predict_dist(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Predicted (mean, variance), each of shape (n, k)."""
        mu, s = self._heads(X)
        return mu, np.exp(s)

    def to_prediction_set(self, X, y, ids=None) -> PredictionSet:
        mu, var = self.predict_dist(X)
        return PredictionSet.from_arrays(mu, var, y, ids)


class QuantilePairRegressor(BaseEstimator):
    """Linear lower/upper quantile heads fitted by subgradient descent on the
    pinball loss.

    Crossed quantiles are not repaired; after :meth:`fit` the fraction of
    training rows with ``lower > upper`` is stored in ``meta_``.
    """

    def __init__(self, lower: float = 0.025, upper: float = 0.975,
                 learning_rate: float = 0.01, n_iter: int = 5000):
        self.lower = lower
        self.upper = upper
        self.learning_rate = learning_rate
        self.n_iter = n_iter

    def fit(self, X, y):
        X, y = _check_Xy(X, y)
        if not 0.0 < self.lower < self.upper < 1.0:
            raise ValueError("need 0 < lower < upper < 1")
        Z = _design(X)
        n, k = y.shape
        taus = (self.lower, self.upper)
        # (2 heads, k components, d + 1)
        W = np.zeros((2, k, Z.shape[1]))
        W[:, :, 0] = np.median(y, axis=0)
        for _ in range(int(self.n_iter)):
            for h, tau in enumerate(taus):
                above = y >= Z @ W[h].T
                g = np.where(above, -tau, 1.0 - tau)
                W[h] -= self.learning_rate * (g.T @ Z) / n
        self.weights_ = W
        self.n_features_in_ = X.shape[1]
        lo, hi = self.predict(X)
        crossed = lo > hi
        self.meta_ = {
            "taus": [float(self.lower), float(self.upper)],
            "crossing_fraction": [float(v) for v in crossed.mean(axis=0)],
            "crossed": bool(crossed.any()),
        }
        return self

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper quantile predictions, each of shape (n, k)."""
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        pred = np.einsum("nd,hkd->hnk", _design(X), self.weights_)
        return pred[0], pred[1]

    def to_quantile_set(self, X, y, ids=None) -> QuantileSet:
        lo, hi = self.predict(X)
        if ids is None:
            ids = [str(i) for i in range(lo.shape[0])]
        return QuantileSet(tuple(ids), lo, hi, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    iterations: int = 5000
    seed: int = 0
    full_batch: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValueError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a non-negative integer, got {self.iterations}")
        if not self.full_batch:
            raise ValueError("only full-batch training is supported")


def train_hetero(X, y, cfg: TrainConfig = TrainConfig()) -> HeteroscedasticRegressor:
    return HeteroscedasticRegressor(cfg.learning_rate, cfg.iterations).fit(X, y)


def train_quantile_baseline(X, y, cfg: TrainConfig = TrainConfig(),
                            lower: float = 0.025, upper: float = 0.975) -> QuantilePairRegressor:
    return QuantilePairRegressor(lower, upper, cfg.learning_rate, cfg.iterations).fit(X, y)


@dataclass(frozen=True)
class ToyData:
    X: np.ndarray
    y: np.ndarray
    mean_weights: np.ndarray
    logvar_weights: np.ndarray


def make_toy_data(n: int, d: int = 3, seed: int = 0, noise_scale: float = 0.1,
                  hetero_slope: float = 0.0, mean_weights: Optional[np.ndarray] = None,
                  noise_multiplier: float = 1.0, stream: int = 0) -> ToyData:
    """Linear-Gaussian (pitch, yaw) regression data over uniform features.

    Features are uniform on [-1, 1]. The true log-variance of each component
    is ``2 log(noise_scale) + hetero_slope * x_0``. ``noise_multiplier``
    scales the realised noise without changing the recorded ground-truth
    weights, which simulates a shifted test domain.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if noise_scale <= 0 or noise_multiplier <= 0:
        raise ValueError("noise_scale and noise_multiplier must be positive")
    gen = rng.stream(seed, stream)
    if mean_weights is None:
        # weights come from a dedicated stream so shifted test sets share them
        mean_weights = rng.stream(seed, 2**32).uniform(-0.1, 0.1, size=(2, d + 1))
    mean_weights = np.asarray(mean_weights, dtype=float)
    logvar_weights = np.zeros((2, d + 1))
    logvar_weights[:, 0] = 2.0 * math.log(noise_scale)
    logvar_weights[:, 1] = hetero_slope
    X = gen.uniform(-1.0, 1.0, size=(n, d))
    Z = _design(X)
    sd = np.exp(0.5 * (Z @ logvar_weights.T))
    y = Z @ mean_weights.T + noise_multiplier * sd * gen.standard_normal((n, 2))
    return ToyData(X, y, mean_weights, logvar_weights)
