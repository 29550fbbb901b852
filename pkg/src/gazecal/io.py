"""Prediction dumps, calibrator persistence and report serialisation.

Dumps are CSV or JSON Lines with angles in radians. Prediction dumps carry
``id,pitch_mean,yaw_mean,pitch_var,yaw_var,pitch_true,yaw_true``; quantile
dumps carry ``id,pitch_lo,pitch_hi,yaw_lo,yaw_hi,pitch_true,yaw_true``.
Floats are written in shortest round-trip form, so a write/read cycle is
lossless.
"""

from __future__ import annotations

import contextlib
import csv
import io as _io
import json
import math
import os
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from gazecal import rng
from gazecal.calibration import CalibratedPredictor
from gazecal.metrics import CoverageCurve
from gazecal.predictions import PredictionSet, QuantileSet

__all__ = [
    "PREDICTION_COLUMNS",
    "QUANTILE_COLUMNS",
    "DumpParseError",
    "detect_dump_kind",
    "load_calibrator",
    "read_predictions",
    "read_quantiles",
    "save_calibrator",
    "split_calibration",
    "write_curve_csv",
    "write_predictions",
    "write_quantiles",
    "write_report",
]

PREDICTION_COLUMNS = ("id", "pitch_mean", "yaw_mean", "pitch_var", "yaw_var",
                      "pitch_true", "yaw_true")
QUANTILE_COLUMNS = ("id", "pitch_lo", "pitch_hi", "yaw_lo", "yaw_hi",
                    "pitch_true", "yaw_true")

PathOrFile = Union[str, os.PathLike, _io.TextIOBase]


class DumpParseError(ValueError):
    """Invalid dump content; ``line`` is 1-based, ``column`` a column name."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[str] = None, source: str = "<stream>"):
        self.line = line
        self.column = column
        self.source = source
        where = source
        if line is not None:
            where += f":{line}"
        if column is not None:
            where += f" [{column}]"
        super().__init__(f"{where}: {message}")


def _infer_format(target, fmt: Optional[str]) -> str:
    if fmt is not None:
        fmt = fmt.lower()
    elif isinstance(target, (str, os.PathLike)):
        suffix = Path(target).suffix.lower()
        fmt = {".csv": "csv", ".jsonl": "jsonl", ".ndjson": "jsonl"}.get(suffix)
    if fmt not in ("csv", "jsonl"):
        raise ValueError("dump format must be 'csv' or 'jsonl' (or inferable from the file suffix)")
    return fmt


@contextlib.contextmanager
def _open(target, mode: str):
    if isinstance(target, (str, os.PathLike)):
        with open(target, mode, encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield target


def _source_name(target) -> str:
    return str(target) if isinstance(target, (str, os.PathLike)) else "<stream>"


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- reading


def _parse_number(raw, line, col, src) -> float:
    if isinstance(raw, bool) or raw is None:
        raise DumpParseError(f"expected a number, got {raw!r}", line, col, src)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise DumpParseError(f"expected a number, got {raw!r}", line, col, src) from None
    if not math.isfinite(value):
        raise DumpParseError(f"value must be finite, got {raw!r}", line, col, src)
    return value


def _iter_rows(fh, fmt: str, columns: Sequence[str], src: str):
    """Yield (line_number, {column: raw}) pairs after structural checks."""
    if fmt == "csv":
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DumpParseError("missing header", 1, None, src)
        if tuple(h.strip() for h in header) != tuple(columns):
            raise DumpParseError(
                f"header must be exactly {','.join(columns)}, got {','.join(header)}",
                1, None, src)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(columns):
                raise DumpParseError(
                    f"expected {len(columns)} fields, got {len(row)}", line, None, src)
            yield line, dict(zip(columns, row))
    else:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise DumpParseError(f"invalid JSON: {exc.msg}", line, None, src) from None
            if not isinstance(obj, dict):
                raise DumpParseError("each line must be a JSON object", line, None, src)
            for col in columns:
                if col not in obj:
                    raise DumpParseError("missing key", line, col, src)
            yield line, obj


def _read_table(source, fmt, columns, positive=()):
    src = _source_name(source)
    ids: list[str] = []
    values: list[list[float]] = []
    seen: dict[str, int] = {}
    with _open(source, "r") as fh:
        for line, row in _iter_rows(fh, fmt, columns, src):
            rid = row["id"]
            if isinstance(rid, (dict, list, bool)) or rid is None or str(rid) == "":
                raise DumpParseError(f"invalid id {rid!r}", line, "id", src)
            rid = str(rid)
            if rid in seen:
                raise DumpParseError(f"duplicate id {rid!r} (first seen on line {seen[rid]})",
                                     line, "id", src)
            seen[rid] = line
            nums = []
            for col in columns[1:]:
                v = _parse_number(row[col], line, col, src)
                if col in positive and v <= 0.0:
                    raise DumpParseError(f"variance must be > 0, got {v!r}", line, col, src)
                nums.append(v)
            pitch_true, yaw_true = nums[-2], nums[-1]
            if abs(pitch_true) > math.pi / 2:
                raise DumpParseError(f"pitch outside [-pi/2, pi/2]: {pitch_true!r}",
                                     line, "pitch_true", src)
            if abs(yaw_true) > math.pi:
                raise DumpParseError(f"yaw outside [-pi, pi]: {yaw_true!r}",
                                     line, "yaw_true", src)
            ids.append(rid)
            values.append(nums)
    table = np.array(values, dtype=float).reshape(-1, len(columns) - 1)
    return tuple(ids), table


def read_predictions(source: PathOrFile, format: Optional[str] = None) -> PredictionSet:
    """Read and validate a Gaussian prediction dump, preserving row order."""
    fmt = _infer_format(source, format)
    ids, t = _read_table(source, fmt, PREDICTION_COLUMNS, positive=("pitch_var", "yaw_var"))
    return PredictionSet(ids, t[:, 0:2], t[:, 2:4], t[:, 4:6])


def read_quantiles(source: PathOrFile, format: Optional[str] = None) -> QuantileSet:
    """Read a two-point quantile dump; crossed rows are kept (see ``QuantileSet.crossed``)."""
    fmt = _infer_format(source, format)
    ids, t = _read_table(source, fmt, QUANTILE_COLUMNS)
    lower = t[:, [0, 2]]
    upper = t[:, [1, 3]]
    return QuantileSet(ids, lower, upper, t[:, 4:6])


def detect_dump_kind(source: Union[str, os.PathLike], format: Optional[str] = None) -> str:
    """Return ``"predictions"`` or ``"quantiles"`` from a dump's header or first record."""
    fmt = _infer_format(source, format)
    with open(source, "r", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            keys = set(h.strip() for h in next(csv.reader(fh), []))
        else:
            keys = set()
            for text in fh:
                if text.strip():
                    try:
                        keys = set(json.loads(text))
                    except (json.JSONDecodeError, TypeError):
                        pass
                    break
    if keys >= set(PREDICTION_COLUMNS):
        return "predictions"
    if keys >= set(QUANTILE_COLUMNS):
        return "quantiles"
    raise DumpParseError("cannot tell whether this is a prediction or quantile dump",
                         1, None, str(source))


# ---------------------------------------------------------------- writing


def _write_table(sink, fmt, columns, ids: Iterable[str], rows: np.ndarray) -> None:
    with _open(sink, "w") as fh:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rid, row in zip(ids, rows):
                writer.writerow([rid, *(_fmt(v) for v in row)])
        else:
            for rid, row in zip(ids, rows):
                obj = {"id": rid}
                obj.update((c, float(v)) for c, v in zip(columns[1:], row))
                fh.write(json.dumps(obj) + "\n")


def write_predictions(pset: PredictionSet, sink: PathOrFile, format: Optional[str] = None) -> None:
    fmt = _infer_format(sink, format)
    rows = np.hstack([pset.mean, pset.var, pset.truth])
    _write_table(sink, fmt, PREDICTION_COLUMNS, pset.ids, rows)


def write_quantiles(qset: QuantileSet, sink: PathOrFile, format: Optional[str] = None) -> None:
    fmt = _infer_format(sink, format)
    rows = np.column_stack([qset.lower[:, 0], qset.upper[:, 0], qset.lower[:, 1],
                            qset.upper[:, 1], qset.truth])
    _write_table(sink, fmt, QUANTILE_COLUMNS, qset.ids, rows)


def split_calibration(pset: PredictionSet, n_cal: int, seed: int = 0):
    """Seeded uniform split into (calibration, test) sets.

    Both parts keep the original row order. The draw uses stream 0 of the
    pinned Philox generator, so the split is reproducible across platforms.
    """
    n = len(pset)
    if int(n_cal) != n_cal or n_cal < 1:
        raise ValueError(f"n_cal must be a positive integer, got {n_cal}")
    if n_cal >= n:
        raise ValueError(f"n_cal ({n_cal}) must be smaller than the set size ({n})")
    chosen = np.zeros(n, dtype=bool)
    chosen[rng.stream(seed, 0).permutation(n)[: int(n_cal)]] = True
    return pset.subset(np.flatnonzero(chosen)), pset.subset(np.flatnonzero(~chosen))


def save_calibrator(cp: CalibratedPredictor, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cp.to_dict(), fh, indent=2)
        fh.write("\n")


def load_calibrator(path: Union[str, os.PathLike]) -> CalibratedPredictor:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid calibrator JSON: {exc.msg}") from None
    return CalibratedPredictor.from_dict(doc)


def write_report(report: dict, path: Union[str, os.PathLike]) -> None:
    """Write a report with sorted keys so equal reports are byte-identical."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curve_csv(curves: Sequence[CoverageCurve], path: Union[str, os.PathLike]) -> None:
    """Coverage curve(s) as ``p,coverage,abs_error`` rows.

    Several curves (per-component mode) get a leading ``indicator`` column.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        multi = len(curves) > 1
        writer.writerow((["indicator"] if multi else []) + ["p", "coverage", "abs_error"])
        for curve in curves:
            for p, c, e in zip(curve.p, curve.coverage, curve.abs_errors):
                writer.writerow(([curve.indicator] if multi else []) + [_fmt(p), _fmt(c), _fmt(e)])
