"""Corpus auditing: run every flaw analysis over labeled series and build the
report document.

Per-series work is independent, so --jobs parallelism is a plain map; records
are collected in input order and each stage is deterministic, which keeps the
report bytes identical for any worker count. For the same reason the worker
count is deliberately not echoed into the report config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import density_flags, density_metrics, label_consistency_scan
from .discord import DiscordParams, discord_score, top_k_discords
from .model import LabelSet, TimeSeries
from .oneliner import (
    Family,
    SearchGrid,
    SolveCriterion,
    brute_force_search,
    expression,
)
from .report import AuditReport

__all__ = ["AuditConfig", "audit_series", "run_audit", "summary_table"]


@dataclass(frozen=True)
class AuditConfig:
    """Knobs for one audit run. Defaults match the CLI defaults."""

    tolerances: tuple[int, ...] = (1,)
    families: tuple[Family, ...] | None = None
    grid: SearchGrid = field(default_factory=SearchGrid)
    sublen: int | None = None  # None: per series, longest region clamped to [4, n//2]
    alpha: float = 0.5
    slop: int = 100
    high_density_fraction: float = 1.0 / 3.0
    sandwich_gap: int = 2
    run_to_failure_threshold: float = 0.7
    discord_topk: int = 3
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        tols = tuple(int(w) for w in self.tolerances)
        if not tols or any(w < 0 for w in tols):
            raise ValueError("tolerances must be non-negative and non-empty")
        object.__setattr__(self, "tolerances", tols)
        if self.families is not None:
            object.__setattr__(self, "families", tuple(Family(f) for f in self.families))
        if self.sublen is not None and int(self.sublen) < 4:
            raise ValueError("sublen must be >= 4")

    def to_dict(self) -> dict:
        return {
            "tolerances": list(self.tolerances),
            "families": None if self.families is None else [f.value for f in self.families],
            "grid": {
                "k_candidates": list(self.grid.k_candidates),
                "c_candidates": list(self.grid.c_candidates),
                "max_b_candidates": self.grid.max_b_candidates,
            },
            "sublen": self.sublen,
            "alpha": self.alpha,
            "slop": self.slop,
            "high_density_fraction": self.high_density_fraction,
            "sandwich_gap": self.sandwich_gap,
            "run_to_failure_threshold": self.run_to_failure_threshold,
            "discord_topk": self.discord_topk,
            "seed": self.seed,
        }


def _spec_dict(spec) -> dict:
    return {
        "family": spec.family.value,
        "u": spec.u,
        "k": spec.k,
        "c": spec.c,
        "b": spec.b,
        "run_len": spec.run_len,
    }


def _effective_sublen(config: AuditConfig, labels: LabelSet, n: int) -> int | None:
    cap = n // 2
    if cap < 4:
        return None
    if config.sublen is not None:
        return config.sublen if config.sublen <= cap else None
    longest = max(r.length for r in labels.regions)
    return min(max(4, longest), cap)


def audit_series(ts: TimeSeries, labels: LabelSet, config: AuditConfig = AuditConfig()) -> dict:
    """All four flaw analyses on one labeled series, as a report record."""
    if labels is None or labels.is_empty:
        raise ValueError(f"series {ts.name!r} has no labels")
    if labels.series_length != len(ts):
        raise ValueError(f"series {ts.name!r}: labels disagree with series length")
    n = len(ts)

    triviality = []
    for w in config.tolerances:
        try:
            spec = brute_force_search(
                ts, labels, config.families, config.grid, SolveCriterion(w)
            )
        except Exception as exc:  # recorded; the series still gets a record
            triviality.append(
                {"tolerance": w, "solved": False, "spec": None, "expression": None,
                 "error": f"{type(exc).__name__}: {exc}"}
            )
            continue
        triviality.append(
            {
                "tolerance": w,
                "solved": spec is not None,
                "spec": None if spec is None else _spec_dict(spec),
                "expression": None if spec is None else expression(spec),
            }
        )

    metrics = density_metrics(labels)
    flags = list(
        density_flags(
            metrics,
            high_density_fraction=config.high_density_fraction,
            sandwich_gap=config.sandwich_gap,
        )
    )
    if triviality[0]["solved"]:
        flags.insert(0, "TRIVIAL")

    last = labels.regions[-1]
    position = {
        "relative_position": last.end / (n - 1),
        "last_point_hit": bool(last.end + config.slop >= n - 1),
    }

    sublen = _effective_sublen(config, labels, n)
    if sublen is None:
        consistency = {"skipped": f"no window length fits n={n} (need 4 <= sublen <= n//2)"}
    else:
        try:
            findings = label_consistency_scan(
                ts, labels, sublen, config.alpha, seed=config.seed
            )
            consistency = {
                "sublen": sublen,
                "alpha": config.alpha,
                "findings": [
                    {
                        "kind": f.kind.value,
                        "location": list(f.location.as_tuple()),
                        "reference": list(f.reference.as_tuple()),
                        "distance": f.distance,
                    }
                    for f in findings
                ],
            }
            kinds = {f.kind.value for f in findings}
            flags.extend(k for k in ("FN_CANDIDATE", "FP_CANDIDATE") if k in kinds)
        except Exception as exc:
            consistency = {"sublen": sublen, "skipped": f"{type(exc).__name__}: {exc}"}

    if sublen is None:
        discord = {"skipped": f"series too short for any window (n={n})"}
    else:
        try:
            params = DiscordParams(sublen)
            trace = discord_score(ts, params)
            top = top_k_discords(trace, config.discord_topk)
            discord = {
                "sublen": params.sublen,
                "exclusion": params.exclusion,
                "top": [
                    {"location": int(j), "score": float(trace.scores[j])} for j in top
                ],
            }
        except Exception as exc:
            discord = {"sublen": sublen, "skipped": f"{type(exc).__name__}: {exc}"}

    record = {
        "series_id": ts.name,
        "n": n,
        "train_end": ts.train_end,
        "labels": {
            "region_count": len(labels.regions),
            "labeled_count": labels.labeled_count,
            "regions": [list(r.as_tuple()) for r in labels.regions],
        },
        "triviality": triviality,
        "density": {
            "anomaly_fraction": metrics.anomaly_fraction,
            "region_count": metrics.region_count,
            "max_region_fraction": metrics.max_region_fraction,
            "min_inter_region_gap": metrics.min_inter_region_gap,
        },
        "position": position,
        "consistency": consistency,
        "discord": discord,
        "flags": flags,
    }
    return record


def run_audit(corpus, config: AuditConfig = AuditConfig()) -> AuditReport:
    """Audit every (TimeSeries, LabelSet) pair and assemble the report."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    for ts, labels in corpus:
        if labels is None or labels.is_empty:
            raise ValueError(f"series {ts.name!r} has no labels")
    if config.jobs != 1 and len(corpus) > 1:
        from joblib import Parallel, delayed

        records = Parallel(n_jobs=config.jobs, prefer="processes")(
            delayed(audit_series)(ts, labels, config) for ts, labels in corpus
        )
    else:
        records = [audit_series(ts, labels, config) for ts, labels in corpus]
    return AuditReport.build(config.to_dict(), records)


def summary_table(report: AuditReport) -> str:
    """Corpus summary for stdout: solved fractions, flag counts, position bias."""
    agg = report.aggregates
    lines = [f"series audited: {agg['series_count']}"]
    for w in sorted(agg["solved"], key=int):
        s = agg["solved"][w]
        lines.append(
            f"solved (w={w}): {s['count']}/{agg['series_count']} ({s['fraction']:.1%})"
        )
    bias = agg["position_bias"]
    lines.append(f"mean relative anomaly position: {bias['mean_position']:.3f}")
    lines.append(f"last-point hit rate: {bias['last_point_hit_rate']:.1%}")
    if bias["run_to_failure"]:
        lines.append("corpus flag: RUN_TO_FAILURE (position bias above threshold)")
    if agg["flag_counts"]:
        lines.append("flag counts:")
        width = max(len(k) for k in agg["flag_counts"])
        for name in sorted(agg["flag_counts"]):
            lines.append(f"  {name:<{width}}  {agg['flag_counts'][name]}")
    else:
        lines.append("flag counts: none")
    return "\n".join(lines)
