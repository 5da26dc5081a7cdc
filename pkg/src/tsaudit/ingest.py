"""Strict file ingestion for the three supported series formats.

Formats:

* ``UCR_SINGLE_COLUMN``: one numeric value per line; the train/test split and
  the single labeled interval come from the filename convention.
* ``CSV_VALUE_LABEL``: comma-separated ``value[,label]`` rows, optionally with
  a leading timestamp column (detected by a non-numeric first field) and one
  optional header line. Timestamps are validated and ignored; labels must be
  0 or 1.
* ``REGIONS_SIDECAR``: a single-column series file plus ``<stem>.labels.json``
  holding ``{"regions": [[start, end], ...], "train_end": optional}``.

Malformed input is an error naming the file and line; nothing is repaired
silently.
"""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path

import numpy as np

from .model import LabelSet, Region, TimeSeries, regions_from_flags
from .scoring import UcrNameError, parse_ucr_name

__all__ = ["IngestError", "SeriesFormat", "detect_format", "load_series", "sidecar_path"]


class IngestError(Exception):
    """Malformed input file; records path and (when known) the line number."""

    def __init__(self, path, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        self.message = message
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class SeriesFormat(enum.Enum):
    UCR_SINGLE_COLUMN = "ucr"
    CSV_VALUE_LABEL = "csv"
    REGIONS_SIDECAR = "sidecar"


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".labels.json")


def _parse_number(token: str, path, line: int, what: str = "value") -> float:
    try:
        v = float(token)
    except ValueError:
        raise IngestError(path, f"non-numeric {what} {token!r}", line) from None
    if not math.isfinite(v):
        raise IngestError(path, f"{what} must be finite, got {token!r}", line)
    return v


def _read_lines(path) -> list[tuple[int, str]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(path, f"cannot read file: {exc.strerror or exc}") from None
    numbered = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    while numbered and not numbered[-1][1]:
        numbered.pop()  # trailing blank lines are universal; interior ones are not
    if not numbered:
        raise IngestError(path, "file is empty")
    return numbered


def _read_numeric_column(path) -> np.ndarray:
    values = []
    for line_no, line in _read_lines(path):
        if not line:
            raise IngestError(path, "blank line inside the data", line_no)
        values.append(_parse_number(line, path, line_no))
    return np.asarray(values, dtype=np.float64)


def _load_ucr(path) -> tuple[TimeSeries, LabelSet]:
    p = Path(path)
    try:
        meta = parse_ucr_name(p.name)
    except UcrNameError as exc:
        raise IngestError(path, str(exc)) from None
    values = _read_numeric_column(p)
    n = values.size
    if meta.end >= n:
        raise IngestError(path, f"labeled interval ends at {meta.end} but the series has {n} samples")
    ts = TimeSeries(p.name.split(".")[0], values, train_end=meta.train_end)
    return ts, LabelSet((Region(meta.begin, meta.end),), n)


def _split_csv(line: str) -> list[str]:
    return [f.strip() for f in line.split(",")]


def _is_number(token: str) -> bool:
    try:
        return math.isfinite(float(token))
    except ValueError:
        return False


def _load_csv(path) -> tuple[TimeSeries, LabelSet | None]:
    p = Path(path)
    rows = _read_lines(p)
    # one optional header line, detected by a non-numeric final field
    if not _is_number(_split_csv(rows[0][1])[-1]):
        header_line = rows[0][0]
        rows = rows[1:]
        if not rows:
            raise IngestError(p, "no data rows after the header", header_line)
    first = _split_csv(rows[0][1])
    ncol = len(first)
    if ncol == 1:
        has_ts, has_label = False, False
    elif ncol == 2:
        has_ts = not _is_number(first[0])
        has_label = not has_ts
    elif ncol == 3:
        has_ts, has_label = True, True
    else:
        raise IngestError(p, f"expected 1 to 3 columns, got {ncol}", rows[0][0])
    values: list[float] = []
    flags: list[int] = []
    for line_no, line in rows:
        if not line:
            raise IngestError(p, "blank line inside the data", line_no)
        fields = _split_csv(line)
        if len(fields) != ncol:
            raise IngestError(p, f"expected {ncol} columns, got {len(fields)}", line_no)
        idx = 1 if has_ts else 0
        values.append(_parse_number(fields[idx], p, line_no))
        if has_label:
            label = _parse_number(fields[idx + 1], p, line_no, what="label")
            if label not in (0.0, 1.0):
                raise IngestError(p, f"label must be 0 or 1, got {fields[idx + 1]!r}", line_no)
            flags.append(int(label))
    series = TimeSeries(p.name.split(".")[0], np.asarray(values))
    labels = regions_from_flags(np.asarray(flags)) if has_label else None
    return series, labels


def _load_sidecar(path) -> tuple[TimeSeries, LabelSet]:
    p = Path(path)
    side = sidecar_path(p)
    values = _read_numeric_column(p)
    try:
        doc = json.loads(side.read_text())
    except OSError as exc:
        raise IngestError(side, f"cannot read sidecar: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise IngestError(side, f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "regions" not in doc:
        raise IngestError(side, 'sidecar must be an object with a "regions" list')
    regions = []
    for item in doc["regions"]:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not all(isinstance(v, int) for v in item)
        ):
            raise IngestError(side, f"each region must be a [start, end] integer pair, got {item!r}")
        try:
            regions.append(Region(item[0], item[1]))
        except ValueError as exc:
            raise IngestError(side, str(exc)) from None
    train_end = doc.get("train_end")
    if train_end is not None and not isinstance(train_end, int):
        raise IngestError(side, "train_end must be an integer when present")
    try:
        series = TimeSeries(p.name.split(".")[0], values, train_end=train_end)
        labels = LabelSet(tuple(regions), values.size)
    except ValueError as exc:
        raise IngestError(side, str(exc)) from None
    return series, labels


def detect_format(path) -> SeriesFormat:
    """Infer the format: a sidecar wins, then a UCR-style name, then .csv."""
    p = Path(path)
    if sidecar_path(p).exists():
        return SeriesFormat.REGIONS_SIDECAR
    try:
        parse_ucr_name(p.name)
        return SeriesFormat.UCR_SINGLE_COLUMN
    except UcrNameError:
        pass
    if p.suffix.lower() == ".csv":
        return SeriesFormat.CSV_VALUE_LABEL
    raise IngestError(
        path,
        "cannot infer the format (no sidecar, not a UCR-style name, not .csv); pass --format",
    )


def load_series(path, fmt: SeriesFormat | str | None = None) -> tuple[TimeSeries, LabelSet | None]:
    """Load one series and its labels (None when the file carries none).

    fmt may be a SeriesFormat, its string value, or None / "auto" to detect:
    a sidecar file wins, then a parseable UCR name, then a .csv suffix.
    """
    if fmt is None or fmt == "auto":
        fmt = detect_format(path)
    elif not isinstance(fmt, SeriesFormat):
        fmt = SeriesFormat(fmt)
    if fmt is SeriesFormat.UCR_SINGLE_COLUMN:
        return _load_ucr(path)
    if fmt is SeriesFormat.CSV_VALUE_LABEL:
        return _load_csv(path)
    return _load_sidecar(path)
