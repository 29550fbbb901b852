"""Coverage probability error, confidence-interval inclusion and error metrics.

A *quantile function* here is any callable ``qf(p) -> (T, 2)`` array giving,
for every sample in a prediction set, the pitch and yaw quantiles at level
``p``. The uncalibrated Gaussian, the calibrated predictor and stored
two-point quantile predictions all fit this shape.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Callable, Optional

import numpy as np
from scipy import stats

from gazecal._validation import InsufficientDataError, check_pair_array
from gazecal.distributions import gaussian_quantile
from gazecal.predictions import PredictionSet

__all__ = [
    "GRID",
    "INDICATORS",
    "CIQuery",
    "CIReport",
    "CPEReport",
    "CoverageCurve",
    "angular_error",
    "coverage_curve",
    "cpe",
    "empirical_coverage",
    "error_uncertainty_correlation",
    "gaussian_quantile_function",
    "gaze_vectors",
    "inclusion_rate",
    "interval_quantile_function",
    "joint_adjusted",
]

QuantileFunction = Callable[[float], np.ndarray]

GRID = tuple(i / 10 for i in range(11))
INDICATORS = ("joint", "pitch", "yaw")


def gaussian_quantile_function(pset: PredictionSet) -> QuantileFunction:
    """Uncalibrated quantiles ``F_t^-1(p)`` of the stored Gaussian marginals."""
    def qf(p):
        return gaussian_quantile(pset.mean, pset.var, p)
    return qf


def joint_adjusted(qf: QuantileFunction) -> QuantileFunction:
    """Query each component at ``sqrt(p)``.

    For independent, per-component calibrated predictions the probability
    that both truths fall below their quantiles is then ``p``, so the joint
    coverage curve can reach the diagonal.
    """
    def adjusted(p):
        return qf(math.sqrt(p))
    return adjusted


def interval_quantile_function(lower, upper, p_lower: float, p_upper: float) -> QuantileFunction:
    """Quantile function backed by stored two-point predictions.

    Only the two stored levels can be queried.
    """
    lower = check_pair_array(lower, "lower")
    upper = check_pair_array(upper, "upper")

    def qf(p):
        if math.isclose(p, p_lower):
            return lower
        if math.isclose(p, p_upper):
            return upper
        raise ValueError(f"stored quantiles exist only at {p_lower} and {p_upper}, not {p}")
    return qf


def _indicator_rows(below: np.ndarray, indicator: str) -> np.ndarray:
    if indicator == "joint":
        return below.all(axis=1)
    if indicator == "pitch":
        return below[:, 0]
    if indicator == "yaw":
        return below[:, 1]
    raise ValueError(f"indicator must be one of {INDICATORS}, got {indicator!r}")


def empirical_coverage(pset: PredictionSet, qf: QuantileFunction, p: float,
                       indicator: str = "joint") -> float:
    """Observed fraction of samples whose truth lies at or below the ``p`` quantile.

    With the default ``"joint"`` indicator both pitch and yaw must satisfy
    the condition. ``p = 0`` and ``p = 1`` return their analytic limits.
    """
    if indicator not in INDICATORS:
        raise ValueError(f"indicator must be one of {INDICATORS}, got {indicator!r}")
    T = len(pset)
    if T == 0:
        raise InsufficientDataError("coverage needs a non-empty prediction set")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    below = pset.truth <= np.asarray(qf(p))
    return int(np.count_nonzero(_indicator_rows(below, indicator))) / T


@dataclass(frozen=True)
class CoverageCurve:
    p: tuple[float, ...]
    coverage: tuple[float, ...]
    indicator: str = "joint"

    def __post_init__(self):
        if len(self.p) != len(GRID) or any(a != b for a, b in zip(self.p, GRID)):
            raise ValueError("coverage curve must be sampled on the 11-point grid 0.0..1.0")
        if len(self.coverage) != len(GRID):
            raise ValueError("coverage curve needs 11 coverage values")

    @property
    def abs_errors(self) -> tuple[float, ...]:
        return tuple(abs(p - c) for p, c in zip(self.p, self.coverage))

    def to_dict(self) -> dict:
        return {"indicator": self.indicator,
                "points": [[p, c] for p, c in zip(self.p, self.coverage)]}


def coverage_curve(pset: PredictionSet, qf: QuantileFunction, indicator: str = "joint",
                   workers: Optional[int] = None) -> CoverageCurve:
    """Empirical coverage at p = 0.0, 0.1, ..., 1.0.

    ``workers`` evaluates grid points concurrently; counts are exact so the
    result does not depend on it.
    """
    def at(p):
        return empirical_coverage(pset, qf, p, indicator)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cov = tuple(pool.map(at, GRID))
    else:
        cov = tuple(at(p) for p in GRID)
    return CoverageCurve(GRID, cov, indicator)


@dataclass(frozen=True)
class CPEReport:
    cpe: float
    curve: CoverageCurve
    per_point_errors: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"cpe": self.cpe, "curve": self.curve.to_dict(),
                "per_point_errors": list(self.per_point_errors)}


def cpe(curve: CoverageCurve) -> CPEReport:
    """Coverage probability error: ``sqrt(sum_i err(0.1 i)^2 / 10)`` over 11 points.

    The divisor is 10 although 11 terms are summed.
    """
    errors = curve.abs_errors
    value = math.sqrt(math.fsum(e * e for e in errors) / 10.0)
    return CPEReport(value, curve, errors)


@dataclass(frozen=True)
class CIQuery:
    p_l: float
    p_u: float

    def __post_init__(self):
        if not 0.0 < self.p_l < self.p_u < 1.0:
            raise ValueError(f"need 0 < p_l < p_u < 1, got p_l={self.p_l}, p_u={self.p_u}")

    @property
    def p_ci(self) -> float:
        return self.p_u - self.p_l

    @classmethod
    def central(cls, level: float) -> "CIQuery":
        """Symmetric interval, e.g. 0.95 -> (0.025, 0.975)."""
        if not 0.0 < level < 1.0:
            raise ValueError(f"confidence level must lie in (0, 1), got {level}")
        p_l = round((1.0 - level) / 2.0, 12)
        return cls(p_l, round(1.0 - p_l, 12))


@dataclass(frozen=True)
class CIReport:
    inclusion_rate: float
    avg_range_pitch: float
    avg_range_yaw: float
    avg_range_combined: float
    inclusion_pitch: float
    inclusion_yaw: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def inclusion_rate(pset: PredictionSet, qf: QuantileFunction, query: CIQuery) -> CIReport:
    """Fraction of samples whose pitch and yaw both fall inside their interval,
    with the average interval widths."""
    T = len(pset)
    if T == 0:
        raise InsufficientDataError("inclusion rate needs a non-empty prediction set")
    lo = np.asarray(qf(query.p_l))
    hi = np.asarray(qf(query.p_u))
    inside = (lo <= pset.truth) & (pset.truth <= hi)
    width = hi - lo
    avg_pitch = math.fsum(width[:, 0]) / T
    avg_yaw = math.fsum(width[:, 1]) / T
    return CIReport(
        inclusion_rate=int(np.count_nonzero(inside.all(axis=1))) / T,
        avg_range_pitch=avg_pitch,
        avg_range_yaw=avg_yaw,
        avg_range_combined=(avg_pitch + avg_yaw) / 2.0,
        inclusion_pitch=int(np.count_nonzero(inside[:, 0])) / T,
        inclusion_yaw=int(np.count_nonzero(inside[:, 1])) / T,
    )


def gaze_vectors(angles) -> np.ndarray:
    """Unit gaze vectors (cos p sin y, sin p, cos p cos y) for (pitch, yaw) rows."""
    a = np.asarray(angles, dtype=float).reshape(-1, 2)
    pitch, yaw = a[:, 0], a[:, 1]
    return np.column_stack([np.cos(pitch) * np.sin(yaw), np.sin(pitch),
                            np.cos(pitch) * np.cos(yaw)])


def angular_error(pred, truth):
    """Angle in degrees between predicted and true gaze directions."""
    scalar = np.ndim(pred) == 1 and np.ndim(truth) == 1
    dots = np.einsum("ij,ij->i", gaze_vectors(pred), gaze_vectors(truth))
    out = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    return float(out[0]) if scalar else out


def error_uncertainty_correlation(pset: PredictionSet, point_estimates=None,
                                  uncertainty=None) -> float:
    """Spearman rank correlation between angular error and predicted uncertainty.

    Uncertainty defaults to ``sqrt(var_pitch + var_yaw)`` of the stored
    marginals; point estimates default to the predicted means. Returns NaN
    when either ranking is constant.
    """
    T = len(pset)
    if T < 3:
        raise InsufficientDataError(f"correlation needs at least 3 samples, got {T}")
    est = pset.mean if point_estimates is None else np.asarray(point_estimates, dtype=float)
    if est.shape != (T, 2):
        raise ValueError(f"point estimates must have shape ({T}, 2), got {est.shape}")
    err = angular_error(est, pset.truth)
    if uncertainty is None:
        uncertainty = np.sqrt(pset.var[:, 0] + pset.var[:, 1])
    uncertainty = np.asarray(uncertainty, dtype=float)
    if np.ptp(err) == 0.0 or np.ptp(uncertainty) == 0.0:
        return math.nan
    return float(stats.spearmanr(err, uncertainty).statistic)
