"""Single-anomaly location scoring and the UCR filename convention.

A prediction is one index per series; it counts as correct when it lands
inside the labeled interval dilated by a slop L on both sides. Filenames of
the form ``*_<train_end>_<begin>_<end>`` carry the split point and the
labeled interval; parsing and rendering round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import PurePath
from typing import Callable

import numpy as np

from .model import TimeSeries

__all__ = [
    "EvaluationReport",
    "ScoringConfig",
    "UcrMeta",
    "UcrNameError",
    "Verdict",
    "evaluate_detector",
    "location_hits",
    "parse_ucr_name",
    "render_ucr_name",
    "score_location",
]

_MARKER = "UCR_Anomaly_"


class UcrNameError(ValueError):
    """A filename that does not follow the UCR anomaly naming convention."""


@dataclass(frozen=True)
class UcrMeta:
    """Metadata carried by a UCR-style filename (0-based inclusive interval)."""

    dataset_name: str
    train_end: int
    begin: int
    end: int

    def __post_init__(self) -> None:
        if not self.dataset_name:
            raise UcrNameError("dataset name is empty")
        if self.train_end <= 0:
            raise UcrNameError("train_end must be positive")
        if self.begin > self.end:
            raise UcrNameError("anomaly interval reversed (begin > end)")
        if self.train_end >= self.begin:
            raise UcrNameError("training prefix overlaps the anomaly (train_end >= begin)")


def parse_ucr_name(filename: str) -> UcrMeta:
    """Extract (dataset_name, train_end, begin, end) from a filename.

    Any file extensions are stripped; the final three underscore-separated
    integer fields are the numbers; the prefix between ``UCR_Anomaly_`` and
    the numbers is the dataset name (leading junk before the marker, such as
    an archive row number, is dropped).
    """
    stem = PurePath(filename).name
    while PurePath(stem).suffix:
        stem = PurePath(stem).stem
    tokens = stem.split("_")
    if len(tokens) < 4:
        raise UcrNameError(f"{filename!r}: expected a name plus three trailing integer fields")
    tail = tokens[-3:]
    try:
        train_end, begin, end = (int(t) for t in tail)
    except ValueError:
        raise UcrNameError(
            f"{filename!r}: trailing fields {'_'.join(tail)!r} must be three integers"
        ) from None
    prefix = "_".join(tokens[:-3])
    pos = prefix.find(_MARKER)
    name = prefix[pos + len(_MARKER) :] if pos != -1 else prefix
    if not name:
        raise UcrNameError(f"{filename!r}: missing dataset name")
    return UcrMeta(name, train_end, begin, end)


def render_ucr_name(meta: UcrMeta, extension: str = ".txt") -> str:
    """Canonical filename for a UcrMeta; parse_ucr_name inverts this exactly."""
    return f"{_MARKER}{meta.dataset_name}_{meta.train_end}_{meta.begin}_{meta.end}{extension}"


@dataclass(frozen=True)
class ScoringConfig:
    """Slop L for location scoring: correct iff begin - L <= pred <= end + L."""

    slop: int = 100

    def __post_init__(self) -> None:
        if self.slop < 0:
            raise ValueError("slop must be >= 0")


def location_hits(predicted: int, begin: int, end: int, slop: int) -> bool:
    """Interval test shared by scoring and the invariance probes."""
    return max(0, begin - slop) <= predicted <= end + slop


def score_location(predicted: int, meta: UcrMeta, config: ScoringConfig = ScoringConfig()) -> bool:
    """True iff the predicted index lands within the slop-dilated interval."""
    if predicted < 0:
        raise ValueError("predicted index must be >= 0")
    return location_hits(predicted, meta.begin, meta.end, config.slop)


@dataclass(frozen=True)
class Verdict:
    series: str
    predicted: int | None
    correct: bool
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    verdicts: tuple[Verdict, ...]
    correct: int
    total: int
    accuracy: float


def evaluate_detector(
    corpus,
    detector: Callable[[np.ndarray, TimeSeries], int],
    config: ScoringConfig = ScoringConfig(),
) -> EvaluationReport:
    """Binary-per-series accuracy of a location detector.

    The detector sees only the training prefix and the raw series (never the
    labels) and must return one index. Detector failures and out-of-bounds
    predictions count as incorrect and are recorded on the verdict.
    """
    verdicts: list[Verdict] = []
    for ts, meta in corpus:
        train_end = ts.train_end if ts.train_end is not None else meta.train_end
        try:
            predicted = int(detector(ts.values[:train_end], ts))
            if not 0 <= predicted < len(ts):
                raise ValueError(f"prediction {predicted} out of bounds for length {len(ts)}")
            verdicts.append(Verdict(ts.name, predicted, score_location(predicted, meta, config)))
        except Exception as exc:
            verdicts.append(Verdict(ts.name, None, False, f"{type(exc).__name__}: {exc}"))
    if not verdicts:
        raise ValueError("corpus is empty")
    correct = sum(1 for v in verdicts if v.correct)
    return EvaluationReport(tuple(verdicts), correct, len(verdicts), correct / len(verdicts))
