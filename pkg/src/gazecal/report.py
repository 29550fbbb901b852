"""Assemble evaluation reports for prediction and quantile dumps."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from gazecal.calibration import CalibratedPredictor
from gazecal.metrics import (
    CIQuery,
    angular_error,
    coverage_curve,
    cpe,
    error_uncertainty_correlation,
    gaussian_quantile_function,
    inclusion_rate,
    interval_quantile_function,
)
from gazecal.predictions import PredictionSet, QuantileSet

__all__ = ["evaluation_report", "quantile_report"]


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _points(curve):
    return [[p, c] for p, c in zip(curve.p, curve.coverage)]


def _ci_dict(query: CIQuery, level: float, ci) -> dict:
    d = {"level": level, "p_l": query.p_l, "p_u": query.p_u}
    d.update(ci.to_dict())
    return d


def evaluation_report(pset: PredictionSet, calibrator: Optional[CalibratedPredictor] = None,
                      ci: float = 0.95, workers: Optional[int] = None):
    """Metrics for a Gaussian prediction set, optionally after recalibration.

    Returns ``(report, curves)`` where ``curves`` maps ``"joint"``, ``"pitch"``
    and ``"yaw"`` to their coverage curves. Point estimates are the predicted
    means without a calibrator and the calibrated medians with one.
    """
    if calibrator is None:
        qf = gaussian_quantile_function(pset)
        point = pset.point_estimates
    else:
        qf = calibrator.quantile_function(pset)
        point = calibrator.median(pset.mean, pset.var)

    curves = {ind: coverage_curve(pset, qf, ind, workers=workers)
              for ind in ("joint", "pitch", "yaw")}
    reports = {ind: cpe(curve) for ind, curve in curves.items()}
    query = CIQuery.central(ci)
    errors = angular_error(point, pset.truth)
    report = {
        "kind": "predictions",
        "calibrated": calibrator is not None,
        "n_samples": len(pset),
        "cpe": reports["joint"].cpe,
        "cpe_pitch": reports["pitch"].cpe,
        "cpe_yaw": reports["yaw"].cpe,
        "curve": _points(curves["joint"]),
        "per_point_errors": list(reports["joint"].per_point_errors),
        "component_curves": {c: _points(curves[c]) for c in ("pitch", "yaw")},
        "ci": _ci_dict(query, ci, inclusion_rate(pset, qf, query)),
        "point_estimate": "calibrated_median" if calibrator is not None else "mean",
        "angular_error_deg": {
            "mean": math.fsum(errors) / errors.size,
            "median": float(np.median(errors)),
        },
        "error_uncertainty_correlation": _finite_or_none(
            error_uncertainty_correlation(pset) if len(pset) >= 3 else math.nan),
        "correlation_method": "spearman",
    }
    if calibrator is not None:
        report["n_calibration"] = calibrator.meta.get("n_calibration")
    return report, curves


def quantile_report(qset: QuantileSet, ci: float = 0.95) -> dict:
    """Inclusion rate and interval widths of stored two-point quantile predictions."""
    query = CIQuery.central(ci)
    qf = interval_quantile_function(qset.lower, qset.upper, query.p_l, query.p_u)
    crossed = qset.crossed
    return {
        "kind": "quantiles",
        "n_samples": len(qset),
        "ci": _ci_dict(query, ci, inclusion_rate(qset, qf, query)),
        "crossed_rows": {"pitch": int(crossed[:, 0].sum()), "yaw": int(crossed[:, 1].sum())},
    }
