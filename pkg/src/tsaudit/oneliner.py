"""One-expression detectors over first differences, and the exhaustive search
that decides whether a labeled series is solvable by one of them.

The family covers thresholds on diff(TS) / abs(diff(TS)), the same signals
compared against a moving mean / moving std envelope, and a constant-run
detector for frozen stretches. A series counts as "solved" when some member
flags at least one sample inside every labeled region (dilated by a tolerance
w) and flags nothing farther than w from a label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import LabelSet, TimeSeries, dilate_region

__all__ = [
    "Family",
    "OneLinerSpec",
    "SearchGrid",
    "SolveCriterion",
    "TrivialityEntry",
    "TrivialityReport",
    "apply_oneliner",
    "audit_triviality",
    "brute_force_search",
    "diff_series",
    "expression",
    "is_solved",
    "moving_mean",
    "moving_std",
    "threshold_candidates",
]


class Family(enum.Enum):
    """Detector families. Declaration order is the search order, simplest first."""

    ABS_DIFF_THRESH = "abs-diff-thresh"  # abs(diff(TS)) > b
    DIFF_THRESH = "diff-thresh"          # diff(TS) > b
    ABS_DIFF_MOV = "abs-diff-mov"        # abs(diff(TS)) > movmean + c*movstd + b
    DIFF_MOV = "diff-mov"                # diff(TS) > movmean + c*movstd + b
    GENERAL_ABS = "general-abs"          # abs(diff(TS)) > u*movmean + c*movstd + b
    GENERAL = "general"                  # diff(TS) > u*movmean + c*movstd + b
    CONST_RUN = "const-run"              # runs of equal samples, length >= run_len

    @property
    def uses_abs(self) -> bool:
        return self in (Family.ABS_DIFF_THRESH, Family.ABS_DIFF_MOV, Family.GENERAL_ABS)

    @property
    def is_threshold_only(self) -> bool:
        return self in (Family.ABS_DIFF_THRESH, Family.DIFF_THRESH)

    @property
    def is_general(self) -> bool:
        return self in (Family.GENERAL_ABS, Family.GENERAL)

    @property
    def uses_moving(self) -> bool:
        return self in (Family.ABS_DIFF_MOV, Family.DIFF_MOV, Family.GENERAL_ABS, Family.GENERAL)


@dataclass(frozen=True)
class OneLinerSpec:
    """A fully-instantiated family member.

    Unused parameters are normalized so that equal detectors compare equal:
    pure-threshold families force (u, k, c) = (0, 1, 0); moving-envelope
    families force u = 1; run_len is 0 except for CONST_RUN, where it is the
    minimum run length (>= 2) and all other parameters are zeroed.
    """

    family: Family
    u: int = 0
    k: int = 1
    c: float = 0.0
    b: float = 0.0
    run_len: int = 0

    def __post_init__(self) -> None:
        fam = self.family
        if not isinstance(fam, Family):
            fam = Family(fam)
            object.__setattr__(self, "family", fam)
        u, k, c, b, run_len = int(self.u), int(self.k), float(self.c), float(self.b), int(self.run_len)
        if fam is Family.CONST_RUN:
            if run_len < 2:
                raise ValueError("CONST_RUN needs run_len >= 2")
            u, k, c, b = 0, 1, 0.0, 0.0
        else:
            run_len = 0
            if k < 1:
                raise ValueError("k must be >= 1")
            if c < 0:
                raise ValueError("c must be >= 0")
            if fam.is_threshold_only:
                u, k, c = 0, 1, 0.0
            elif fam.is_general:
                if u not in (0, 1):
                    raise ValueError("u must be 0 or 1")
            else:
                u = 1
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "run_len", run_len)


@dataclass(frozen=True)
class SolveCriterion:
    """Tolerance for the solved test: labels dilated by w, flags within w."""

    w: int = 1

    def __post_init__(self) -> None:
        if int(self.w) < 0:
            raise ValueError("w must be >= 0")
        object.__setattr__(self, "w", int(self.w))


@dataclass(frozen=True)
class SearchGrid:
    """Candidate parameter grid for the brute-force search."""

    k_candidates: tuple[int, ...] = (3, 5, 10, 21, 50, 101)
    c_candidates: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0)
    max_b_candidates: int = 512

    def __post_init__(self) -> None:
        ks = tuple(sorted(int(k) for k in self.k_candidates))
        cs = tuple(sorted(float(c) for c in self.c_candidates))
        if not ks or not cs:
            raise ValueError("candidate sets must be non-empty")
        if any(k < 1 for k in ks):
            raise ValueError("k candidates must be >= 1")
        if any(c < 0 for c in cs):
            raise ValueError("c candidates must be >= 0")
        if 5 not in ks:
            raise ValueError("k candidates must include 5")
        if 0.0 not in cs:
            raise ValueError("c candidates must include 0")
        if int(self.max_b_candidates) < 1:
            raise ValueError("max_b_candidates must be >= 1")
        object.__setattr__(self, "k_candidates", ks)
        object.__setattr__(self, "c_candidates", cs)
        object.__setattr__(self, "max_b_candidates", int(self.max_b_candidates))


def diff_series(ts: TimeSeries) -> np.ndarray:
    """First differences; entry i is values[i+1] - values[i]."""
    return np.diff(ts.values)


def _window_edges(n: int, k: int) -> tuple[int, int]:
    # reach to the left / right of the center position, nominal window length k
    return (k - 1) // 2, k // 2


def moving_mean(x, k: int) -> np.ndarray:
    """Centered moving mean with windows shrinking at the boundaries.

    Position i averages x over [i - floor((k-1)/2), i + ceil((k-1)/2)]
    intersected with the valid index range.
    """
    x = np.asarray(x, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    n = x.size
    out = np.empty(n, dtype=np.float64)
    left, right = _window_edges(n, k)
    if k <= n:
        out[left : n - right] = sliding_window_view(x, k).mean(axis=1)
        edges = list(range(left)) + list(range(n - right, n))
    else:
        edges = list(range(n))
    for i in edges:
        out[i] = x[max(0, i - left) : min(n - 1, i + right) + 1].mean()
    return out


def moving_std(x, k: int) -> np.ndarray:
    """Centered moving sample std (ddof=1), same windows as moving_mean.

    A window holding a single sample has std 0 by definition.
    """
    x = np.asarray(x, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    n = x.size
    if k == 1:
        return np.zeros(n, dtype=np.float64)
    out = np.empty(n, dtype=np.float64)
    left, right = _window_edges(n, k)
    if k <= n:
        out[left : n - right] = sliding_window_view(x, k).std(axis=1, ddof=1)
        edges = list(range(left)) + list(range(n - right, n))
    else:
        edges = list(range(n))
    for i in edges:
        w = x[max(0, i - left) : min(n - 1, i + right) + 1]
        out[i] = 0.0 if w.size == 1 else w.std(ddof=1)
    return out


def _const_run_bounds(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Starts and inclusive ends of maximal runs of equal consecutive samples."""
    change = np.nonzero(np.diff(x) != 0)[0]
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change, [x.size - 1]))
    return starts, ends


def apply_oneliner(spec: OneLinerSpec, ts: TimeSeries) -> np.ndarray:
    """Evaluate a spec on a series; returns flagged indices in sample coordinates.

    Exceedance of the differenced signal at diff position i flags sample i+1
    (the sample that produced the jump). CONST_RUN flags every member of each
    maximal constant run of length >= run_len, using exact equality.
    """
    x = ts.values
    if spec.family is Family.CONST_RUN:
        if spec.run_len > x.size:
            raise ValueError("series too short for run_len")
        starts, ends = _const_run_bounds(x)
        keep = (ends - starts + 1) >= spec.run_len
        if not keep.any():
            return np.empty(0, dtype=np.intp)
        return np.concatenate(
            [np.arange(s, e + 1, dtype=np.intp) for s, e in zip(starts[keep], ends[keep])]
        )
    d = np.diff(x)
    sig = np.abs(d) if spec.family.uses_abs else d
    if spec.family.is_threshold_only:
        exceed = sig > spec.b
    else:
        if spec.k > sig.size:
            raise ValueError("series too short for window k")
        envelope = spec.c * moving_std(sig, spec.k) + spec.b
        if spec.u:
            envelope = envelope + moving_mean(sig, spec.k)
        exceed = sig > envelope
    return np.nonzero(exceed)[0].astype(np.intp) + 1


def is_solved(flags, labels: LabelSet, criterion: SolveCriterion = SolveCriterion()) -> bool:
    """Perfect-detection test at tolerance w.

    True iff every labeled region, dilated by w, contains at least one flag,
    and every flag lies within w of some labeled sample.
    """
    if labels.is_empty:
        raise ValueError("label set is empty")
    f = np.asarray(flags, dtype=np.intp)
    n = labels.series_length
    if f.size and (f.min() < 0 or f.max() >= n):
        raise ValueError("flag index out of series bounds")
    if f.size == 0:
        return False
    f = np.sort(f)
    w = criterion.w
    for r in labels.dilated(w):
        i = np.searchsorted(f, r.start, side="left")
        if i >= f.size or f[i] > r.end:
            return False
    return bool(labels.dilated_mask(w)[f].all())


def threshold_candidates(x, max_count: int = 512) -> np.ndarray:
    """Midpoints between consecutive distinct values, quantile-subsampled.

    Flag sets of a strict threshold change only at data values, so the
    midpoints enumerate every distinct non-trivial flag set. When there are
    more than max_count midpoints they are subsampled at evenly spaced ranks,
    always keeping the smallest and largest midpoint.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot derive candidates from an empty vector")
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    u = np.unique(x)
    mids = (u[:-1] + u[1:]) / 2.0
    if mids.size > max_count:
        idx = np.unique(np.round(np.linspace(0, mids.size - 1, max_count)).astype(np.intp))
        mids = mids[idx]
    return mids


def _first_solving_threshold(
    sig: np.ndarray, candidates: np.ndarray, labels: LabelSet, w: int
) -> float | None:
    """Smallest candidate b for which ``sig > b`` is a perfect detection.

    Works for any signal indexed like a differenced series (position i flags
    sample i+1). Exploits that the flag set only shrinks as b grows: the
    solvable b form one interval [max outside, min per-region max), so only
    its smallest contained candidate needs an explicit check.
    """
    if candidates.size == 0:
        return None
    n = labels.series_length
    mask = labels.dilated_mask(w)
    admissible = mask[1:]  # sig position i corresponds to sample i+1
    outside = sig[~admissible]
    lo = outside.max() if outside.size else -np.inf
    hi = np.inf
    for r in labels.dilated(w):
        a = max(0, r.start - 1)
        z = min(n - 2, r.end - 1)
        if a > z:
            return None  # region can never receive a flag from this signal
        hi = min(hi, sig[a : z + 1].max())
    if not lo < hi:
        return None
    i = int(np.searchsorted(candidates, lo, side="left"))
    if i < candidates.size and candidates[i] < hi:
        return float(candidates[i])
    return None


def _search_threshold_family(family, sig, labels, grid, w):
    b = _first_solving_threshold(sig, threshold_candidates(sig, grid.max_b_candidates), labels, w)
    return None if b is None else OneLinerSpec(family, b=b)


def _search_moving_family(family, sig, labels, grid, w):
    us = (0, 1) if family.is_general else (1,)
    best: tuple[float, int, float, int] | None = None
    for k in grid.k_candidates:
        if k > sig.size:
            continue
        mm = moving_mean(sig, k)
        ms = moving_std(sig, k)
        for c in grid.c_candidates:
            base = sig - c * ms
            for u in us:
                residual = base - mm if u else base
                b = _first_solving_threshold(
                    residual, threshold_candidates(residual, grid.max_b_candidates), labels, w
                )
                if b is not None:
                    key = (b, k, c, u)
                    if best is None or key < best:
                        best = key
    if best is None:
        return None
    b, k, c, u = best
    return OneLinerSpec(family, u=u, k=k, c=c, b=b)


def _search_const_run(x: np.ndarray, labels: LabelSet, w: int) -> OneLinerSpec | None:
    starts, ends = _const_run_bounds(x)
    lengths = ends - starts + 1
    max_len = int(lengths.max())
    if max_len < 2:
        return None
    mask = labels.dilated_mask(w)
    dil = labels.dilated(w)
    run_inside = np.array([bool(mask[s : e + 1].all()) for s, e in zip(starts, ends)])
    for run_len in range(2, max_len + 1):
        keep = lengths >= run_len
        if not keep.any():
            break
        # every dilated region must overlap a kept run
        covered = all(
            bool(((starts[keep] <= r.end) & (ends[keep] >= r.start)).any()) for r in dil
        )
        if not covered:
            break  # runs only shrink from here on
        if run_inside[keep].all():
            return OneLinerSpec(Family.CONST_RUN, run_len=run_len)
    return None


_SEARCH_ORDER = tuple(Family)


def brute_force_search(
    ts: TimeSeries,
    labels: LabelSet,
    families=None,
    grid: SearchGrid = SearchGrid(),
    criterion: SolveCriterion = SolveCriterion(),
) -> OneLinerSpec | None:
    """First family member that perfectly solves the labeled series, or None.

    Deterministic order: families in enum order (thresholds, then moving
    envelopes, then the general forms, then CONST_RUN); within a family
    ascending b, then k, then c, then u; CONST_RUN ascends run_len. The
    returned spec is exactly the one an exhaustive grid evaluation in that
    order would hit first.
    """
    if labels.is_empty:
        raise ValueError("label set is empty")
    if labels.series_length != len(ts):
        raise ValueError("labels and series disagree on length")
    wanted = set(Family) if families is None else {Family(f) for f in families}
    w = criterion.w
    d = np.diff(ts.values)
    for family in _SEARCH_ORDER:
        if family not in wanted:
            continue
        if family is Family.CONST_RUN:
            spec = _search_const_run(ts.values, labels, w)
        else:
            sig = np.abs(d) if family.uses_abs else d
            if family.is_threshold_only:
                spec = _search_threshold_family(family, sig, labels, grid, w)
            else:
                spec = _search_moving_family(family, sig, labels, grid, w)
        if spec is not None:
            return spec
    return None


@dataclass(frozen=True)
class TrivialityEntry:
    series: str
    solved: bool
    spec: OneLinerSpec | None
    error: str | None = None


@dataclass(frozen=True)
class TrivialityReport:
    entries: tuple[TrivialityEntry, ...]
    solved: int
    total: int
    fraction: float

    def by_family(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            if e.spec is not None:
                counts[e.spec.family.value] = counts.get(e.spec.family.value, 0) + 1
        return counts


def _triviality_entry(ts, labels, families, grid, criterion):
    try:
        spec = brute_force_search(ts, labels, families, grid, criterion)
    except Exception as exc:  # recorded, series skipped
        return TrivialityEntry(ts.name, False, None, str(exc))
    return TrivialityEntry(ts.name, spec is not None, spec)


def audit_triviality(
    corpus,
    families=None,
    grid: SearchGrid = SearchGrid(),
    criterion: SolveCriterion = SolveCriterion(),
    jobs: int = 1,
) -> TrivialityReport:
    """Run the brute-force search over (series, labels) pairs.

    Per-series failures are recorded in the entry and count as unsolved; the
    fraction is solved / total over all series.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    if jobs != 1:
        from joblib import Parallel, delayed

        entries = Parallel(n_jobs=jobs, prefer="processes")(
            delayed(_triviality_entry)(ts, labels, families, grid, criterion)
            for ts, labels in corpus
        )
    else:
        entries = [_triviality_entry(ts, labels, families, grid, criterion) for ts, labels in corpus]
    solved = sum(1 for e in entries if e.solved)
    return TrivialityReport(tuple(entries), solved, len(entries), solved / len(entries))


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def expression(spec: OneLinerSpec) -> str:
    """Human-readable expression for a spec, matching the CLI output syntax."""
    fam = spec.family
    if fam is Family.CONST_RUN:
        return f"diff(diff(TS)) == 0 (constant run of length >= {spec.run_len})"
    sig = "abs(diff(TS))" if fam.uses_abs else "diff(TS)"
    if fam.is_threshold_only:
        return f"{sig} > {_fmt(spec.b)}"
    parts = []
    if fam.is_general:
        parts.append(f"{spec.u} * movmean({sig}, {spec.k})")
    else:
        parts.append(f"movmean({sig}, {spec.k})")
    parts.append(f"{_fmt(spec.c)} * movstd({sig}, {spec.k})")
    parts.append(_fmt(spec.b))
    return f"{sig} > " + " + ".join(parts)
