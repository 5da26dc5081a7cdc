"""Core data model: time series, labeled regions, and score traces.

Everything downstream (search, diagnostics, discord scoring, reporting) works
in terms of these types. Conventions that the rest of the package relies on:

* series values are 1-D float64, finite, length >= 2, and immutable;
* regions use inclusive endpoints in 0-based sample coordinates;
* label sets are normalized on construction (sorted, overlapping or adjacent
  regions merged);
* score traces carry their own alignment metadata so positions can always be
  mapped back to original sample coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Alignment",
    "LabelSet",
    "Region",
    "ScoreTrace",
    "TimeSeries",
    "as_float_array",
    "dilate_region",
    "flags_from_regions",
    "regions_from_flags",
]


def as_float_array(values, *, name: str = "values") -> np.ndarray:
    """Validate and coerce an array-like into a finite 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite (found NaN or infinity)")
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A named univariate series with an optional training-prefix boundary.

    Attributes:
        name: identifier used in reports and CLI output.
        values: finite float64 samples, read-only, length >= 2.
        train_end: exclusive end of the training prefix, or None when the
            series has no train/test split. Must satisfy 0 < train_end < n.
    """

    name: str
    values: np.ndarray
    train_end: int | None = None

    def __post_init__(self) -> None:
        arr = as_float_array(self.values).copy()
        if arr.size < 2:
            raise ValueError("a time series needs at least 2 samples")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.train_end is not None:
            t = int(self.train_end)
            if not 0 < t < arr.size:
                raise ValueError(
                    f"train_end must lie strictly inside the series, got {t} for length {arr.size}"
                )
            object.__setattr__(self, "train_end", t)

    def __len__(self) -> int:
        return int(self.values.size)

    def training_prefix(self) -> np.ndarray:
        """Samples before train_end. Raises when no split is defined."""
        if self.train_end is None:
            raise ValueError(f"series {self.name!r} has no training prefix")
        return self.values[: self.train_end]


@dataclass(frozen=True, order=True)
class Region:
    """Inclusive index interval [start, end] with 0 <= start <= end."""

    start: int
    end: int

    def __post_init__(self) -> None:
        s, e = int(self.start), int(self.end)
        if s < 0 or e < s:
            raise ValueError(f"invalid region ({s}, {e}): need 0 <= start <= end")
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def contains(self, index: int) -> bool:
        return self.start <= index <= self.end

    def intersects(self, other: "Region") -> bool:
        return self.start <= other.end and other.start <= self.end

    def as_tuple(self) -> tuple[int, int]:
        return (self.start, self.end)


def dilate_region(region: Region, w: int, series_length: int) -> Region:
    """Expand a region by w on both sides, clamped to [0, series_length - 1]."""
    if w < 0:
        raise ValueError("dilation width must be >= 0")
    if series_length < 1 or region.end >= series_length:
        raise ValueError(
            f"region ({region.start}, {region.end}) does not fit in a series of length {series_length}"
        )
    return Region(max(0, region.start - w), min(series_length - 1, region.end + w))


@dataclass(frozen=True)
class LabelSet:
    """Normalized ground-truth regions for a series of a known length.

    Regions are sorted by start and merged when they overlap or touch, so a
    LabelSet is a canonical representation: two label sets describing the same
    set of anomalous samples compare equal.
    """

    regions: tuple[Region, ...]
    series_length: int

    def __post_init__(self) -> None:
        n = int(self.series_length)
        if n < 1:
            raise ValueError("series_length must be >= 1")
        object.__setattr__(self, "series_length", n)
        rs = sorted(Region(r.start, r.end) if not isinstance(r, Region) else r for r in self.regions)
        for r in rs:
            if r.end >= n:
                raise ValueError(f"region ({r.start}, {r.end}) exceeds series length {n}")
        merged: list[Region] = []
        for r in rs:
            if merged and r.start <= merged[-1].end + 1:
                merged[-1] = Region(merged[-1].start, max(merged[-1].end, r.end))
            else:
                merged.append(r)
        object.__setattr__(self, "regions", tuple(merged))

    @property
    def is_empty(self) -> bool:
        return not self.regions

    @property
    def labeled_count(self) -> int:
        return sum(r.length for r in self.regions)

    def to_flags(self) -> np.ndarray:
        return flags_from_regions(self)

    def dilated(self, w: int) -> tuple[Region, ...]:
        return tuple(dilate_region(r, w, self.series_length) for r in self.regions)

    def dilated_mask(self, w: int) -> np.ndarray:
        """Boolean per-sample mask of the union of w-dilated regions."""
        mask = np.zeros(self.series_length, dtype=bool)
        for r in self.dilated(w):
            mask[r.start : r.end + 1] = True
        return mask


def regions_from_flags(flags) -> LabelSet:
    """Convert a per-sample 0/1 (or boolean) vector into a LabelSet.

    Maximal runs of true samples become regions; the inverse of
    :func:`flags_from_regions`.
    """
    arr = np.asarray(flags)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("flags must be a non-empty 1-D vector")
    b = arr.astype(bool)
    padded = np.concatenate(([False], b, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0] - 1
    return LabelSet(tuple(Region(int(s), int(e)) for s, e in zip(starts, ends)), int(arr.size))


def flags_from_regions(labels: LabelSet) -> np.ndarray:
    """Render a LabelSet back into a boolean per-sample vector."""
    mask = np.zeros(labels.series_length, dtype=bool)
    for r in labels.regions:
        mask[r.start : r.end + 1] = True
    return mask


class Alignment(enum.Enum):
    """How a trace position maps back to original sample coordinates."""

    SUBSEQ_START = "start"
    SUBSEQ_MIDDLE = "middle"
    SUBSEQ_END = "end"


@dataclass(frozen=True, eq=False)
class ScoreTrace:
    """A per-position score vector plus the metadata needed to interpret it.

    For subsequence scores (subsequence_length m > 0) the trace has one entry
    per window start and implies a series of length len(scores) + m - 1.
    Pointwise traces use subsequence_length 0 and map positions identically.
    """

    scores: np.ndarray
    alignment: Alignment
    subsequence_length: int = 0

    def __post_init__(self) -> None:
        arr = as_float_array(self.scores, name="scores")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)
        m = int(self.subsequence_length)
        if m < 0:
            raise ValueError("subsequence_length must be >= 0")
        if arr.size == 0:
            raise ValueError("a score trace cannot be empty")
        object.__setattr__(self, "subsequence_length", m)
        if not isinstance(self.alignment, Alignment):
            object.__setattr__(self, "alignment", Alignment(self.alignment))

    def __len__(self) -> int:
        return int(self.scores.size)

    @property
    def series_length(self) -> int:
        m = self.subsequence_length
        return int(self.scores.size + m - 1) if m > 0 else int(self.scores.size)

    @property
    def offset(self) -> int:
        m = self.subsequence_length
        if m == 0:
            return 0
        if self.alignment is Alignment.SUBSEQ_START:
            return 0
        if self.alignment is Alignment.SUBSEQ_MIDDLE:
            return m // 2
        return m - 1

    def to_original_index(self, position: int) -> int:
        """Map a trace position to the sample coordinate it scores."""
        if not 0 <= position < self.scores.size:
            raise IndexError(f"trace position {position} out of range")
        return position + self.offset

    def argmax_original(self) -> int:
        """Original-coordinate location of the trace maximum (ties: smallest)."""
        return int(np.argmax(self.scores)) + self.offset
