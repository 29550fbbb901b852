"""Gaussian CDF and quantile kernels.

All functions accept scalars or numpy arrays and broadcast. Scalar input
gives a Python float back.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

__all__ = [
    "GaussianMarginal",
    "std_normal_cdf",
    "std_normal_quantile",
    "gaussian_cdf",
    "gaussian_quantile",
]


def _as_float(values, out):
    if np.ndim(values) == 0:
        return float(out)
    return out


def std_normal_cdf(z):
    """Standard normal CDF, accurate to double precision over the whole line."""
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("std_normal_cdf requires finite input")
    return _as_float(z, special.ndtr(z_arr))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    The endpoints are rejected rather than mapped to infinities; callers that
    need the limits handle them analytically.
    """
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise ValueError("std_normal_quantile is defined for 0 < p < 1 only")
    return _as_float(p, special.ndtri(p_arr))


@dataclass(frozen=True)
class GaussianMarginal:
    """One-dimensional Gaussian predictive marginal (radians, radians**2)."""

    mean: float
    variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean!r}")
        if not (math.isfinite(self.variance) and self.variance > 0.0):
            raise ValueError(f"variance must be finite and > 0, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x):
        return gaussian_cdf(self.mean, self.variance, x)

    def quantile(self, p):
        return gaussian_quantile(self.mean, self.variance, p)


def _check_params(mean, variance):
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if not np.all(np.isfinite(mean)):
        raise ValueError("mean must be finite")
    if not np.all(np.isfinite(variance) & (variance > 0.0)):
        raise ValueError("variance must be finite and strictly positive")
    return mean, variance


def gaussian_cdf(mean, variance, x):
    """CDF of N(mean, variance) evaluated at ``x``."""
    mean_arr, var_arr = _check_params(mean, variance)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("gaussian_cdf requires finite x")
    out = special.ndtr((x_arr - mean_arr) / np.sqrt(var_arr))
    scalar = np.ndim(mean) == 0 and np.ndim(variance) == 0 and np.ndim(x) == 0
    return float(out) if scalar else out


def gaussian_quantile(mean, variance, p):
    """Quantile function of N(mean, variance) for 0 < p < 1."""
    mean_arr, var_arr = _check_params(mean, variance)
    z = np.asarray(std_normal_quantile(np.asarray(p, dtype=float)))
    out = mean_arr + np.sqrt(var_arr) * z
    scalar = np.ndim(mean) == 0 and np.ndim(variance) == 0 and np.ndim(p) == 0
    return float(out) if scalar else out
