"""Monotone calibration maps on [0, 1] fitted by pool adjacent violators."""

from __future__ import annotations

import json
from typing import Optional, Sequence

import numpy as np

__all__ = ["MonotoneMap", "pava", "pava_fit", "pool_ties"]


class MonotoneMap:
    """Nondecreasing piecewise-linear map of [0, 1] onto itself.

    Knots are anchored at (0, 0) and (1, 1); x is strictly increasing and y
    nondecreasing. Instances are immutable.
    """

    __slots__ = ("_x", "_y")

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x = np.array(x, dtype=float)
        y = np.array(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("knot x and y must be 1-D arrays of equal length")
        if x.size < 2:
            raise ValueError("a monotone map needs at least 2 knots")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("knots must be finite")
        if x[0] != 0.0 or y[0] != 0.0 or x[-1] != 1.0 or y[-1] != 1.0:
            raise ValueError("first knot must be (0, 0) and last knot (1, 1)")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("knot x values must be strictly increasing")
        if np.any(np.diff(y) < 0.0):
            raise ValueError("knot y values must be nondecreasing")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_y", y)

    def __setattr__(self, name, value):
        raise AttributeError("MonotoneMap is immutable")

    @classmethod
    def identity(cls) -> "MonotoneMap":
        return cls([0.0, 1.0], [0.0, 1.0])

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def knots(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self._x, self._y)]

    def __len__(self) -> int:
        return self._x.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, MonotoneMap):
            return NotImplemented
        return np.array_equal(self._x, other._x) and np.array_equal(self._y, other._y)

    def __hash__(self):
        return hash((self._x.tobytes(), self._y.tobytes()))

    def __repr__(self) -> str:
        return f"MonotoneMap(n_knots={len(self)})"

    def __call__(self, p):
        return self.evaluate(p)

    def evaluate(self, p):
        """Linear interpolation between the bracketing knots."""
        p_arr = _check_unit(p)
        out = np.interp(p_arr, self._x, self._y)
        return float(out) if np.ndim(p) == 0 else out

    def invert(self, p):
        """Preimage of ``p``; the midpoint when the preimage is a flat stretch."""
        p_arr = _check_unit(p)
        x, y = self._x, self._y
        last = x.size - 1

        # left edge: inf {x : m(x) >= p}
        i = np.searchsorted(y, p_arr, side="left")
        i_hi = np.clip(i, 1, last)
        lo = _segment_solve(x, y, i_hi - 1, i_hi, p_arr)
        lo = np.where(i == 0, x[0], lo)

        # right edge: sup {x : m(x) <= p}
        j = np.searchsorted(y, p_arr, side="right")
        j_hi = np.clip(j, 1, last)
        hi = _segment_solve(x, y, j_hi - 1, j_hi, p_arr)
        hi = np.where(j > last, x[-1], hi)

        out = 0.5 * (lo + hi)
        return float(out) if np.ndim(p) == 0 else out

    def to_dict(self) -> dict:
        return {"knots": [[float(a), float(b)] for a, b in zip(self._x, self._y)]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MonotoneMap":
        try:
            knots = doc["knots"]
            x = [float(k[0]) for k in knots]
            y = [float(k[1]) for k in knots]
            if any(len(k) != 2 for k in knots):
                raise ValueError("each knot must be an [x, y] pair")
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed monotone map document: {exc}") from exc
        return cls(x, y)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MonotoneMap":
        return cls.from_dict(json.loads(text))


def _check_unit(p) -> np.ndarray:
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr >= 0.0) & (p_arr <= 1.0)):
        raise ValueError("probability argument must lie in [0, 1]")
    return p_arr


def _segment_solve(x, y, a, b, p):
    dy = y[b] - y[a]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dy > 0.0, (p - y[a]) / dy, 0.0)
    return x[a] + np.clip(t, 0.0, 1.0) * (x[b] - x[a])


def pava(values: Sequence[float], weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """Weighted least-squares nondecreasing fit of ``values`` (in given order).

    Classic stack-based pool adjacent violators, O(n).
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if weights is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != values.shape:
            raise ValueError("weights must match values in shape")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be positive")

    # each block: (weighted sum, total weight, length)
    sums: list[float] = []
    wts: list[float] = []
    lens: list[int] = []
    for v, w in zip(values, weights):
        s, tw, ln = v * w, w, 1
        while sums and sums[-1] / wts[-1] > s / tw:
            s += sums.pop()
            tw += wts.pop()
            ln += lens.pop()
        sums.append(s)
        wts.append(tw)
        lens.append(ln)
    means = np.array(sums) / np.array(wts)
    return np.repeat(means, lens)


def pool_ties(x, y, weights=None):
    """Sort by x and merge tied x values into their weighted mean y.

    Returns ``(x_unique, y_pooled, weight_sum)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    order = np.lexsort((y, x))
    x, y, w = x[order], y[order], w[order]
    ux, start = np.unique(x, return_index=True)
    wsum = np.add.reduceat(w, start)
    ysum = np.add.reduceat(w * y, start)
    return ux, ysum / wsum, wsum


def pava_fit(x, y, weights=None) -> MonotoneMap:
    """Fit the isotonic calibration map through points ``(x_i, y_i)``.

    Tied x values are pooled first, the nondecreasing least-squares fit is
    taken at the distinct x values, clamped to [0, 1], and anchored with the
    knots (0, 0) and (1, 1). Data sitting exactly on x = 0 or x = 1 is
    superseded by the anchors.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size == 0:
        raise ValueError("pava_fit needs at least one point")
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if weights is not None:
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.shape != x.shape:
            raise ValueError("weights must match x in shape")
        if not np.all(np.isfinite(weights) & (weights > 0.0)):
            raise ValueError("weights must be finite and positive")
    for name, arr in (("x", x), ("y", y)):
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError(f"all {name} values must lie in [0, 1]")

    ux, uy, uw = pool_ties(x, y, weights)
    fitted = np.clip(pava(uy, uw), 0.0, 1.0)

    inner = (ux > 0.0) & (ux < 1.0)
    knots_x = np.concatenate(([0.0], ux[inner], [1.0]))
    knots_y = np.concatenate(([0.0], fitted[inner], [1.0]))
    return MonotoneMap(knots_x, knots_y)
