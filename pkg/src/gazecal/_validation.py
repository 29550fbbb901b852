"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

COMPONENTS = ("pitch", "yaw")


class InsufficientDataError(ValueError):
    """Raised when a computation needs more samples than it was given."""


def component_index(component) -> int:
    """Map ``"pitch"``/``"yaw"`` (or 0/1) to a column index."""
    if isinstance(component, numbers.Integral) and component in (0, 1):
        return int(component)
    try:
        return COMPONENTS.index(component)
    except ValueError:
        raise ValueError(f"component must be 'pitch' or 'yaw', got {component!r}") from None


def check_open_probability(p, name: str = "p") -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must satisfy 0 < {name} < 1, got {p}")
    return p


def check_probability(p, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_pair_array(a, name: str) -> np.ndarray:
    """Validate an (n, 2) float array of finite (pitch, yaw) values."""
    a = check_array(a, dtype=np.float64, ensure_all_finite=True, copy=True,
                    ensure_min_samples=0, input_name=name)
    if a.shape[1] != 2:
        raise ValueError(f"{name} must have 2 columns (pitch, yaw), got {a.shape[1]}")
    return a


def check_gaussian_X(X) -> tuple[np.ndarray, np.ndarray]:
    """Split an estimator input ``X`` into (mean, var) arrays of shape (n, 2).

    ``X`` columns are ``pitch_mean, yaw_mean, pitch_var, yaw_var``.
    """
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != 4:
        raise ValueError(
            "X must have 4 columns: pitch_mean, yaw_mean, pitch_var, yaw_var; "
            f"got {X.shape[1]}"
        )
    var = X[:, 2:]
    if np.any(var <= 0.0):
        raise ValueError("predicted variances must be strictly positive")
    return X[:, :2], var


def check_angles(truth: np.ndarray, name: str = "truth") -> None:
    """Reject gaze angles outside |pitch| <= pi/2, |yaw| <= pi."""
    bad_pitch = np.abs(truth[:, 0]) > np.pi / 2
    bad_yaw = np.abs(truth[:, 1]) > np.pi
    if bad_pitch.any():
        i = int(np.flatnonzero(bad_pitch)[0])
        raise ValueError(f"{name} pitch out of range [-pi/2, pi/2] at row {i}: {truth[i, 0]}")
    if bad_yaw.any():
        i = int(np.flatnonzero(bad_yaw)[0])
        raise ValueError(f"{name} yaw out of range [-pi, pi] at row {i}: {truth[i, 1]}")
