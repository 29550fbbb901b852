"""Per-component isotonic recalibration of Gaussian gaze predictions.

The recalibration data for each component is built from probability integral
transform (PIT) values of a held-out calibration set: sorted PIT values
``u_(i)`` are paired with their empirical CDF ``i / (n + 1)`` and an isotonic
map ``R`` is fitted through them. Calibrated quantiles are then
``F^-1(R^-1(p))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
import os
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from gazecal._validation import (
    COMPONENTS,
    InsufficientDataError,
    check_gaussian_X,
    check_open_probability,
    check_pair_array,
    component_index,
)
from gazecal.distributions import gaussian_cdf, gaussian_quantile
from gazecal.isotonic import MonotoneMap, pava_fit
from gazecal.predictions import AngularPair, LabeledPrediction, PredictionSet

__all__ = [
    "MIN_CALIBRATION_SAMPLES",
    "CalibratedPredictor",
    "IsotonicRecalibrator",
    "RecalibrationPoints",
    "build_recalibration_points",
    "calibrated_median",
    "calibrated_quantile",
    "fit_calibrator",
    "pit_values",
]

MIN_CALIBRATION_SAMPLES = 10
# R^-1(p) is kept this far from {0, 1} before the Gaussian quantile
INVERSE_CLIP = 1e-9


class RecalibrationPoints(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray


def pit_values(pset: PredictionSet, component) -> np.ndarray:
    """PIT value ``F_t(truth_t)`` of every sample for one component, in input order."""
    c = component_index(component)
    if len(pset) == 0:
        raise InsufficientDataError("pit_values needs a non-empty prediction set")
    return np.asarray(gaussian_cdf(pset.mean[:, c], pset.var[:, c], pset.truth[:, c]))


def build_recalibration_points(pits) -> RecalibrationPoints:
    """Pair sorted PIT values with their empirical CDF ``i / (n + 1)``."""
    u = np.sort(np.asarray(pits, dtype=float).ravel())
    n = u.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 PIT values, got {n}")
    if not np.all((u >= 0.0) & (u <= 1.0)):
        raise ValueError("PIT values must lie in [0, 1]")
    y = np.arange(1, n + 1, dtype=float) / (n + 1)
    return RecalibrationPoints(u, y, np.ones(n))


def _fit_map(pits) -> MonotoneMap:
    pts = build_recalibration_points(pits)
    return pava_fit(pts.x, pts.y, pts.weight)


def _created_timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for reproducible artifacts
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch
            else datetime.now(timezone.utc))
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class CalibratedPredictor:
    """Independent pitch and yaw calibration maps."""

    pitch_map: MonotoneMap
    yaw_map: MonotoneMap
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def maps(self) -> tuple[MonotoneMap, MonotoneMap]:
        return (self.pitch_map, self.yaw_map)

    def adjusted_level(self, component, p):
        """Error-adjusted probability ``R^-1(p)``, clipped away from 0 and 1."""
        m = self.maps[component_index(component)]
        return np.clip(m.invert(p), INVERSE_CLIP, 1.0 - INVERSE_CLIP)

    def quantile(self, mean, var, component, p):
        """Calibrated quantile ``F^-1(R^-1(p))`` for arrays of Gaussian marginals."""
        p = check_open_probability(p)
        return gaussian_quantile(mean, var, float(self.adjusted_level(component, p)))

    def quantile_function(self, pset: PredictionSet):
        """``p -> (T, 2)`` array of calibrated quantiles over ``pset``."""
        def qf(p):
            return np.column_stack([
                self.quantile(pset.mean[:, c], pset.var[:, c], c, p) for c in (0, 1)
            ])
        return qf

    def median(self, mean, var) -> np.ndarray:
        mean = np.asarray(mean, dtype=float).reshape(-1, 2)
        var = np.asarray(var, dtype=float).reshape(-1, 2)
        return np.column_stack([self.quantile(mean[:, c], var[:, c], c, 0.5) for c in (0, 1)])

    def to_dict(self) -> dict:
        return {
            "pitch_map": self.pitch_map.to_dict(),
            "yaw_map": self.yaw_map.to_dict(),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CalibratedPredictor":
        try:
            pitch, yaw = doc["pitch_map"], doc["yaw_map"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"calibrator document lacks a component map: {exc}") from exc
        return cls(MonotoneMap.from_dict(pitch), MonotoneMap.from_dict(yaw),
                   dict(doc.get("meta", {})))


def fit_calibrator(calibration_set: PredictionSet,
                   min_samples: int = MIN_CALIBRATION_SAMPLES) -> CalibratedPredictor:
    """Fit one isotonic map per component from a held-out calibration set."""
    n = len(calibration_set)
    if n < min_samples:
        raise InsufficientDataError(
            f"calibration needs at least {min_samples} samples, got {n}")
    maps = [_fit_map(pit_values(calibration_set, c)) for c in COMPONENTS]
    meta = {"n_calibration": n, "created": _created_timestamp()}
    return CalibratedPredictor(maps[0], maps[1], meta)


def calibrated_quantile(cp: CalibratedPredictor, sample: LabeledPrediction,
                        component, p: float) -> float:
    c = component_index(component)
    g = sample.marginal(c)
    return float(cp.quantile(g.mean, g.variance, c, p))


def calibrated_median(cp: CalibratedPredictor, sample: LabeledPrediction) -> AngularPair:
    return AngularPair(calibrated_quantile(cp, sample, 0, 0.5),
                       calibrated_quantile(cp, sample, 1, 0.5))


class IsotonicRecalibrator(BaseEstimator):
    """Estimator wrapper around :func:`fit_calibrator`.

    ``X`` has columns ``pitch_mean, yaw_mean, pitch_var, yaw_var`` and ``y``
    holds the true (pitch, yaw) angles.

    Parameters
    ----------
    min_samples : int, default=10
        Smallest calibration set accepted by :meth:`fit`.
    interval : float, default=0.95
        Central coverage used by :meth:`predict_interval` when no level is given.
    """

    def __init__(self, min_samples: int = MIN_CALIBRATION_SAMPLES, interval: float = 0.95):
        self.min_samples = min_samples
        self.interval = interval

    def fit(self, X, y):
        mean, var = check_gaussian_X(X)
        y = check_pair_array(y, "y")
        if y.shape[0] != mean.shape[0]:
            raise ValueError("X and y have inconsistent numbers of samples")
        pset = PredictionSet.from_arrays(mean, var, y)
        self.calibrator_ = fit_calibrator(pset, min_samples=self.min_samples)
        self.pitch_map_, self.yaw_map_ = self.calibrator_.maps
        self.n_calibration_ = len(pset)
        return self

    @classmethod
    def from_calibrator(cls, cp: CalibratedPredictor, **params) -> "IsotonicRecalibrator":
        est = cls(**params)
        est.calibrator_ = cp
        est.pitch_map_, est.yaw_map_ = cp.maps
        est.n_calibration_ = cp.meta.get("n_calibration")
        return est

    def predict_quantile(self, X, p: float) -> np.ndarray:
        check_is_fitted(self, "calibrator_")
        mean, var = check_gaussian_X(X)
        return np.column_stack([self.calibrator_.quantile(mean[:, c], var[:, c], c, p)
                                for c in (0, 1)])

    def predict(self, X) -> np.ndarray:
        """Calibrated medians, the point estimate after recalibration."""
        return self.predict_quantile(X, 0.5)

    def predict_interval(self, X, interval: Optional[float] = None):
        level = self.interval if interval is None else interval
        check_open_probability(level, "interval")
        lo = (1.0 - level) / 2.0
        return self.predict_quantile(X, lo), self.predict_quantile(X, 1.0 - lo)

    def transform(self, X, y):
        """Calibrated PIT values ``R(F(y))``; uniform when calibration succeeded."""
        check_is_fitted(self, "calibrator_")
        mean, var = check_gaussian_X(X)
        y = check_pair_array(y, "y")
        u = gaussian_cdf(mean, var, y)
        return np.column_stack([m.evaluate(u[:, c]) for c, m in enumerate(self.calibrator_.maps)])

    def score(self, X, y) -> float:
        """Negative joint coverage probability error (higher is better)."""
        from gazecal.metrics import coverage_curve, cpe

        check_is_fitted(self, "calibrator_")
        mean, var = check_gaussian_X(X)
        pset = PredictionSet.from_arrays(mean, var, check_pair_array(y, "y"))
        return -cpe(coverage_curve(pset, self.calibrator_.quantile_function(pset))).cpe
