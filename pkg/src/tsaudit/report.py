"""Versioned audit-report documents and plot bundles.

Reports are canonical JSON: keys sorted, two-space indent, LF endings, every
float rounded to 9 significant digits. Per-series leaf values are rounded
*before* corpus aggregates are computed, so a reader can recompute the
aggregates from the stored records and get bit-identical numbers. That
recomputation runs on every read and write; a mismatch means the document was
edited by hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

import numpy as np

from .model import LabelSet, ScoreTrace, TimeSeries

__all__ = [
    "SCHEMA_VERSION",
    "AuditReport",
    "ReportError",
    "canonical_json",
    "compute_aggregates",
    "read_report",
    "round9",
    "write_plot_bundle",
    "write_report",
]

SCHEMA_VERSION = "1"


class ReportError(Exception):
    """Unreadable, wrong-version, or internally inconsistent report document."""


def round9(x: float) -> float:
    """Nearest double to x's 9-significant-digit decimal rendering."""
    return float(format(float(x), ".9g"))


def _sanitize(obj):
    """Plain JSON types only, floats rounded; applied before serialization."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round9(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(obj) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def compute_aggregates(series_records, *, run_to_failure_threshold: float = 0.7) -> dict:
    """Corpus aggregates from per-series records.

    Input records must already be sanitized (floats rounded), so that the
    write-time result and a read-time recomputation agree exactly.
    """
    records = list(series_records)
    if not records:
        raise ValueError("no series records")
    solved: dict[str, dict] = {}
    for rec in records:
        for entry in rec["triviality"]:
            key = str(entry["tolerance"])
            bucket = solved.setdefault(key, {"count": 0})
            bucket["count"] += 1 if entry["solved"] else 0
    for bucket in solved.values():
        bucket["fraction"] = round9(bucket["count"] / len(records))
    flag_counts: dict[str, int] = {}
    for rec in records:
        for flag in rec["flags"]:
            flag_counts[flag] = flag_counts.get(flag, 0) + 1
    positions = [rec["position"]["relative_position"] for rec in records]
    hit_rate = fmean(1.0 if rec["position"]["last_point_hit"] else 0.0 for rec in records)
    mean_position = round9(fmean(positions))
    return {
        "series_count": len(records),
        "solved": solved,
        "flag_counts": flag_counts,
        "position_bias": {
            "mean_position": mean_position,
            "last_point_hit_rate": round9(hit_rate),
            "run_to_failure": bool(mean_position > run_to_failure_threshold),
        },
    }


@dataclass(frozen=True)
class AuditReport:
    """The audit document: configuration echo, per-series records, aggregates."""

    config: dict
    series: list
    aggregates: dict
    schema_version: str = SCHEMA_VERSION

    @classmethod
    def build(cls, config: dict, series_records) -> "AuditReport":
        config = _sanitize(config)
        records = _sanitize(list(series_records))
        aggregates = compute_aggregates(
            records,
            run_to_failure_threshold=config.get("run_to_failure_threshold", 0.7),
        )
        return cls(config=config, series=records, aggregates=_sanitize(aggregates))

    def to_document(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "series": self.series,
            "aggregates": self.aggregates,
        }

    @property
    def flagged(self) -> bool:
        if any(rec["flags"] for rec in self.series):
            return True
        return bool(self.aggregates["position_bias"]["run_to_failure"])


def _verify(doc: dict, path, *, when: str) -> None:
    config = doc.get("config", {})
    try:
        expected = _sanitize(
            compute_aggregates(
                doc["series"],
                run_to_failure_threshold=config.get("run_to_failure_threshold", 0.7),
            )
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"{path}: malformed series records: {exc}") from None
    if _sanitize(doc["aggregates"]) != expected:
        raise ReportError(
            f"{path}: aggregates do not match the per-series records ({when})"
        )


def write_report(report: AuditReport, path) -> None:
    doc = report.to_document()
    _verify(doc, path, when="refusing to write an inconsistent report")
    Path(path).write_text(canonical_json(doc), newline="\n")


def read_report(path) -> AuditReport:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ReportError(f"{path}: cannot read: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ReportError(f"{path}: not an audit report")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ReportError(
            f"{path}: schema version {doc['schema_version']!r} unsupported"
            f" (expected {SCHEMA_VERSION!r})"
        )
    for key in ("config", "series", "aggregates"):
        if key not in doc:
            raise ReportError(f"{path}: missing {key!r}")
    _verify(doc, path, when="document edited after writing?")
    return AuditReport(
        config=doc["config"],
        series=doc["series"],
        aggregates=doc["aggregates"],
        schema_version=doc["schema_version"],
    )


def _cell(v: float) -> str:
    return format(float(v), ".9g")


def write_plot_bundle(
    ts: TimeSeries,
    labels: LabelSet | None,
    traces,
    path,
    svg_path=None,
) -> None:
    """Tab-separated series + label + score columns, one row per sample.

    traces: sequence of (name, ScoreTrace) pairs. Scores land at original
    coordinates via each trace's alignment; rows a trace does not cover get an
    empty cell. The optional SVG render is cosmetic; the TSV is the contract.
    """
    traces = list(traces)
    names = [name for name, _ in traces]
    if len(set(names)) != len(names):
        raise ValueError("duplicate trace names in plot bundle")
    n = len(ts)
    columns = []
    for name, trace in traces:
        if trace.offset + len(trace.scores) > n:
            raise ValueError(f"trace {name!r} does not fit a series of length {n}")
        col = [""] * n
        for j, s in enumerate(trace.scores):
            col[trace.to_original_index(j)] = _cell(s)
        columns.append(col)
    flags = labels.to_flags() if labels is not None else np.zeros(n, dtype=np.intp)
    lines = ["\t".join(["index", "value", "label", *names])]
    for i in range(n):
        row = [str(i), _cell(ts.values[i]), str(int(flags[i]))]
        row.extend(col[i] for col in columns)
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    if svg_path is not None:
        _render_svg(ts, labels, traces, svg_path)


def _render_svg(ts, labels, traces, svg_path) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(12, 4))
    ax.plot(ts.values, color="0.2", lw=0.8, label="series")
    if labels is not None:
        for r in labels.regions:
            ax.axvspan(r.start, r.end + 1, color="tab:red", alpha=0.2, lw=0)
    if traces:
        ax2 = ax.twinx()
        for name, trace in traces:
            xs = np.arange(len(trace.scores)) + trace.offset
            ax2.plot(xs, trace.scores, lw=0.9, label=name)
        ax2.legend(loc="upper right", fontsize="small")
        ax2.set_ylabel("score")
    ax.set_xlabel("index")
    ax.set_ylabel("value")
    ax.set_title(ts.name)
    fig.tight_layout()
    # date metadata and unsalted element ids would break byte-identical reruns
    with matplotlib.rc_context({"svg.hashsalt": ts.name}):
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
