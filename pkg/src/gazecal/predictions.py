"""Containers for labeled Gaussian gaze predictions."""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from gazecal._validation import check_angles, check_pair_array
from gazecal.distributions import GaussianMarginal

__all__ = ["AngularPair", "LabeledPrediction", "PredictionSet", "QuantileSet"]


class AngularPair(NamedTuple):
    """A (pitch, yaw) gaze direction in radians."""

    pitch: float
    yaw: float

    def validate(self) -> "AngularPair":
        if not (math.isfinite(self.pitch) and math.isfinite(self.yaw)):
            raise ValueError(f"angles must be finite: {self}")
        if abs(self.pitch) > math.pi / 2 or abs(self.yaw) > math.pi:
            raise ValueError(f"angles out of range: {self}")
        return self


@dataclass(frozen=True)
class LabeledPrediction:
    id: str
    pitch: GaussianMarginal
    yaw: GaussianMarginal
    truth: AngularPair

    def marginal(self, component: int) -> GaussianMarginal:
        return (self.pitch, self.yaw)[component]


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Ordered labeled predictions, stored column-wise.

    ``mean``, ``var`` and ``truth`` are (T, 2) arrays whose columns are
    (pitch, yaw). Arrays are made read-only on construction.
    """

    ids: tuple[str, ...]
    mean: np.ndarray
    var: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        mean = check_pair_array(self.mean, "mean")
        var = check_pair_array(self.var, "var")
        truth = check_pair_array(self.truth, "truth")
        ids = tuple(str(i) for i in self.ids)
        if not (mean.shape == var.shape == truth.shape) or len(ids) != mean.shape[0]:
            raise ValueError("ids, mean, var and truth must describe the same samples")
        if np.any(var <= 0.0):
            raise ValueError("predicted variances must be strictly positive")
        check_angles(truth)
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        for a in (mean, var, truth):
            a.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "truth", truth)

    @classmethod
    def from_arrays(cls, mean, var, truth, ids: Optional[Sequence] = None) -> "PredictionSet":
        n = np.shape(mean)[0]
        if ids is None:
            ids = [str(i) for i in range(n)]
        return cls(tuple(ids), *(np.array(a, dtype=float).reshape(-1, 2)
                                 for a in (mean, var, truth)))

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledPrediction]) -> "PredictionSet":
        ids = [s.id for s in samples]
        mean = [[s.pitch.mean, s.yaw.mean] for s in samples]
        var = [[s.pitch.variance, s.yaw.variance] for s in samples]
        truth = [[s.truth.pitch, s.truth.yaw] for s in samples]
        return cls.from_arrays(np.reshape(mean, (-1, 2)), np.reshape(var, (-1, 2)),
                               np.reshape(truth, (-1, 2)), ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return (self.ids == other.ids and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.var, other.var)
                and np.array_equal(self.truth, other.truth))

    def sample(self, i: int) -> LabeledPrediction:
        return LabeledPrediction(
            id=self.ids[i],
            pitch=GaussianMarginal(float(self.mean[i, 0]), float(self.var[i, 0])),
            yaw=GaussianMarginal(float(self.mean[i, 1]), float(self.var[i, 1])),
            truth=AngularPair(float(self.truth[i, 0]), float(self.truth[i, 1])),
        )

    def subset(self, indices) -> "PredictionSet":
        idx = np.asarray(indices, dtype=int)
        return PredictionSet(tuple(self.ids[i] for i in idx), self.mean[idx],
                             self.var[idx], self.truth[idx])

    @property
    def X(self) -> np.ndarray:
        """Estimator input layout: pitch_mean, yaw_mean, pitch_var, yaw_var."""
        return np.hstack([self.mean, self.var])

    @property
    def point_estimates(self) -> np.ndarray:
        return np.array(self.mean)


@dataclass(frozen=True, eq=False)
class QuantileSet:
    """Two-point (lower, upper) quantile predictions with labels.

    Rows where ``lower > upper`` are kept and reported by :attr:`crossed`.
    """

    ids: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        lower = check_pair_array(self.lower, "lower")
        upper = check_pair_array(self.upper, "upper")
        truth = check_pair_array(self.truth, "truth")
        ids = tuple(str(i) for i in self.ids)
        if not (lower.shape == upper.shape == truth.shape) or len(ids) != lower.shape[0]:
            raise ValueError("ids, lower, upper and truth must describe the same samples")
        check_angles(truth)
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        for a in (lower, upper, truth):
            a.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "truth", truth)

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantileSet):
            return NotImplemented
        return (self.ids == other.ids and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper)
                and np.array_equal(self.truth, other.truth))

    @property
    def crossed(self) -> np.ndarray:
        """(T, 2) mask of rows whose lower bound exceeds the upper bound."""
        return self.lower > self.upper
