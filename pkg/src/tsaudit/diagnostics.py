"""Benchmark-flaw diagnostics: label density, placement bias, subsequence
features, and a twin-based label consistency scan.

The consistency scan looks for unlabeled near-duplicates of labeled anomalies
(missed-label candidates) and for labeled regions that are indistinguishable
from normal data (false-label candidates). Distances use the same
z-normalized Euclidean convention as the discord module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from statistics import fmean, median

import numpy as np

from .discord import DEFAULT_ZNORM_EPS, znormed_windows
from .model import LabelSet, Region, TimeSeries, dilate_region
from .perturb import make_rng

__all__ = [
    "ConsistencyFinding",
    "DensityMetrics",
    "FindingKind",
    "PositionBias",
    "SubseqFeatures",
    "density_flags",
    "density_metrics",
    "label_consistency_scan",
    "position_bias",
    "subsequence_features",
]


@dataclass(frozen=True)
class DensityMetrics:
    """How much of a series is labeled anomalous, and how the labels cluster."""

    anomaly_fraction: float
    region_count: int
    max_region_fraction: float
    min_inter_region_gap: int | None


def density_metrics(labels: LabelSet) -> DensityMetrics:
    """Label-density summary; sum of region lengths / n equals anomaly_fraction."""
    n = labels.series_length
    lengths = [r.length for r in labels.regions]
    fraction = sum(lengths) / n
    max_fraction = max(lengths) / n if lengths else 0.0
    gaps = [
        nxt.start - prev.end - 1
        for prev, nxt in zip(labels.regions, labels.regions[1:])
    ]
    return DensityMetrics(fraction, len(lengths), max_fraction, min(gaps) if gaps else None)


def density_flags(
    metrics: DensityMetrics,
    *,
    high_density_fraction: float = 1.0 / 3.0,
    sandwich_gap: int = 2,
) -> tuple[str, ...]:
    """Flaw flags implied by density metrics. Thresholds are configuration."""
    flags: list[str] = []
    if metrics.max_region_fraction >= high_density_fraction:
        flags.append("HIGH_DENSITY")
    if metrics.region_count > 1:
        flags.append("MULTIPLE_ANOMALIES")
    if metrics.min_inter_region_gap is not None and metrics.min_inter_region_gap <= sandwich_gap:
        flags.append("SANDWICH")
    return tuple(flags)


@dataclass(frozen=True)
class PositionBias:
    """Where labeled anomalies sit within their series, corpus-wide."""

    relative_positions: tuple[float, ...]
    mean_position: float
    last_point_hit_rate: float


def position_bias(corpus, slop: int = 0) -> PositionBias:
    """Relative position (end of last region / (n-1)) per series, plus the
    fraction of series whose final sample falls inside the slop-dilated last
    region (a run-to-failure tell)."""
    rels: list[float] = []
    hits = 0
    for ts, labels in corpus:
        if labels.is_empty:
            raise ValueError(f"series {ts.name!r} has no labels")
        n = len(ts)
        last = labels.regions[-1]
        rels.append(last.end / (n - 1))
        if last.end + slop >= n - 1:
            hits += 1
    if not rels:
        raise ValueError("corpus is empty")
    return PositionBias(tuple(rels), fmean(rels), hits / len(rels))


@dataclass(frozen=True)
class SubseqFeatures:
    """Shape summary of one labeled stretch (sample variance, lag-1
    autocorrelation, and the root-sum-square of first differences)."""

    mean: float
    min: float
    max: float
    variance: float
    lag1_autocorr: float
    complexity: float


def subsequence_features(ts: TimeSeries, region: Region) -> SubseqFeatures:
    if region.end >= len(ts):
        raise ValueError("region exceeds series bounds")
    seg = ts.values[region.start : region.end + 1]
    if seg.size < 2:
        raise ValueError("need at least 2 samples to compute features")
    smin = float(seg.min())
    smax = float(seg.max())
    if smin == smax:  # constant snippet: autocorr 0 by convention
        return SubseqFeatures(smin, smin, smax, 0.0, 0.0, 0.0)
    # the sample mean lies in [min, max]; rounding must not push it outside
    mu = min(max(float(seg.mean()), smin), smax)
    centered = seg - mu
    denom = float(np.dot(centered, centered))
    ac = float(np.dot(centered[:-1], centered[1:]) / denom) if denom > 0 else 0.0
    d = np.diff(seg)
    return SubseqFeatures(
        mean=mu,
        min=smin,
        max=smax,
        variance=float(seg.var(ddof=1)),
        lag1_autocorr=ac,
        complexity=float(np.sqrt(np.dot(d, d))),
    )


class FindingKind(enum.Enum):
    FN_CANDIDATE = "FN_CANDIDATE"  # unlabeled twin of a labeled anomaly
    FP_CANDIDATE = "FP_CANDIDATE"  # labeled region indistinguishable from normal


@dataclass(frozen=True)
class ConsistencyFinding:
    kind: FindingKind
    location: Region
    reference: Region
    distance: float


def label_consistency_scan(
    ts: TimeSeries,
    labels: LabelSet,
    sublen: int,
    alpha: float = 0.5,
    *,
    seed: int = 0,
    sample_size: int = 256,
) -> list[ConsistencyFinding]:
    """Hunt for mislabeling evidence around each labeled region.

    For every labeled region, the length-sublen window centered on it is
    compared (z-normalized Euclidean) against every window that stays clear of
    all dilated labels. Non-overlapping local minima at or below
    ``alpha * median nearest-neighbor distance`` of a seeded window sample
    become FN candidates; a labeled region whose own nearest unlabeled
    neighbor is at or below the same threshold becomes an FP candidate.
    Deterministic given the seed.
    """
    n = len(ts)
    if sublen < 4:
        raise ValueError("sublen must be >= 4")
    if sublen > n // 2:
        raise ValueError("sublen must be at most half the series length")
    if labels.is_empty:
        raise ValueError("label set is empty")
    if not 0 < alpha:
        raise ValueError("alpha must be positive")

    z = znormed_windows(ts.values, sublen, DEFAULT_ZNORM_EPS)
    nwin = z.shape[0]
    blocked = np.zeros(nwin, dtype=bool)
    for r in labels.dilated(sublen // 2):
        blocked[max(0, r.start - sublen + 1) : r.end + 1] = True
    valid_idx = np.nonzero(~blocked)[0]
    if valid_idx.size == 0:
        return []

    # Threshold: alpha times the median nearest-neighbor distance of a seeded
    # sample of unlabeled windows (full-window exclusion against trivial matches).
    rng = make_rng(seed)
    if valid_idx.size > sample_size:
        sample = np.sort(rng.choice(valid_idx, size=sample_size, replace=False))
    else:
        sample = valid_idx
    nn_dists: list[float] = []
    for p in sample:
        far = np.abs(valid_idx - p) >= sublen
        if not far.any():
            continue
        d = np.linalg.norm(z[valid_idx[far]] - z[p], axis=1)
        nn_dists.append(float(d.min()))
    threshold = alpha * median(nn_dists) if nn_dists else 0.0

    findings: list[ConsistencyFinding] = []
    for region in labels.regions:
        center = (region.start + region.end) // 2
        anchor = min(max(0, center - sublen // 2), n - sublen)
        profile = np.linalg.norm(z[valid_idx] - z[anchor], axis=1)
        # missed-label candidates: greedy non-overlapping minima
        work = profile.copy()
        while True:
            best = int(np.argmin(work))
            dist = float(work[best])
            if not np.isfinite(dist) or dist > threshold:
                break
            j = int(valid_idx[best])
            findings.append(
                ConsistencyFinding(
                    FindingKind.FN_CANDIDATE, Region(j, j + sublen - 1), region, dist
                )
            )
            work[np.abs(valid_idx - j) < sublen] = np.inf
        # false-label candidate: the region's own nearest unlabeled neighbor
        nearest = int(np.argmin(profile))
        nearest_dist = float(profile[nearest])
        if nearest_dist <= threshold:
            j = int(valid_idx[nearest])
            findings.append(
                ConsistencyFinding(
                    FindingKind.FP_CANDIDATE, region, Region(j, j + sublen - 1), nearest_dist
                )
            )
    return findings
