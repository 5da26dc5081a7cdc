"""Audit toolkit for labeled time-series anomaly benchmarks.

Quantifies four recurring benchmark flaws: series solvable by a one-line
detector, implausibly dense labels, labels contradicted by the data around
them, and anomalies piled up at the end of the series. Ships the
nearest-neighbor discord baseline, seeded anomaly injection, perturbation
probes, and a location-scoring protocol behind one CLI (``tsaudit``).
"""

from .audit import AuditConfig, audit_series, run_audit, summary_table
from .detectors import (
    DiscordDetector,
    OneLinerDetector,
    make_location_detector,
    make_trace_detector,
)
from .diagnostics import (
    ConsistencyFinding,
    DensityMetrics,
    FindingKind,
    PositionBias,
    SubseqFeatures,
    density_flags,
    density_metrics,
    label_consistency_scan,
    position_bias,
    subsequence_features,
)
from .discord import DiscordParams, discord_score, top_k_discords, znorm
from .ingest import IngestError, SeriesFormat, detect_format, load_series
from .model import (
    Alignment,
    LabelSet,
    Region,
    ScoreTrace,
    TimeSeries,
    dilate_region,
    flags_from_regions,
    regions_from_flags,
)
from .oneliner import (
    Family,
    OneLinerSpec,
    SearchGrid,
    SolveCriterion,
    TrivialityReport,
    apply_oneliner,
    audit_triviality,
    brute_force_search,
    diff_series,
    expression,
    is_solved,
    moving_mean,
    moving_std,
    threshold_candidates,
)
from .perturb import (
    AmplitudeScale,
    ConstantFreeze,
    Dropout,
    GaussianNoise,
    InjectionKind,
    InjectionSpec,
    LinearTrend,
    Offset,
    Perturbation,
    ProbeReport,
    ProbeResult,
    UniformScaling,
    WanderingBaseline,
    apply_perturbation,
    describe_perturbation,
    inject_anomaly,
    invariance_probe,
    make_rng,
    parse_perturbation,
)
from .report import AuditReport, ReportError, read_report, write_plot_bundle, write_report
from .scoring import (
    EvaluationReport,
    ScoringConfig,
    UcrMeta,
    UcrNameError,
    evaluate_detector,
    parse_ucr_name,
    render_ucr_name,
    score_location,
)

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AmplitudeScale",
    "AuditConfig",
    "AuditReport",
    "ConsistencyFinding",
    "ConstantFreeze",
    "DensityMetrics",
    "DiscordDetector",
    "DiscordParams",
    "Dropout",
    "EvaluationReport",
    "Family",
    "FindingKind",
    "GaussianNoise",
    "IngestError",
    "InjectionKind",
    "InjectionSpec",
    "LabelSet",
    "LinearTrend",
    "Offset",
    "OneLinerDetector",
    "OneLinerSpec",
    "Perturbation",
    "PositionBias",
    "ProbeReport",
    "ProbeResult",
    "Region",
    "ReportError",
    "ScoreTrace",
    "ScoringConfig",
    "SearchGrid",
    "SeriesFormat",
    "SolveCriterion",
    "SubseqFeatures",
    "TimeSeries",
    "TrivialityReport",
    "UcrMeta",
    "UcrNameError",
    "UniformScaling",
    "WanderingBaseline",
    "apply_oneliner",
    "apply_perturbation",
    "audit_series",
    "audit_triviality",
    "brute_force_search",
    "density_flags",
    "density_metrics",
    "describe_perturbation",
    "detect_format",
    "diff_series",
    "dilate_region",
    "discord_score",
    "evaluate_detector",
    "expression",
    "flags_from_regions",
    "inject_anomaly",
    "invariance_probe",
    "is_solved",
    "label_consistency_scan",
    "load_series",
    "make_location_detector",
    "make_rng",
    "make_trace_detector",
    "moving_mean",
    "moving_std",
    "parse_perturbation",
    "parse_ucr_name",
    "position_bias",
    "read_report",
    "regions_from_flags",
    "render_ucr_name",
    "run_audit",
    "score_location",
    "subsequence_features",
    "summary_table",
    "threshold_candidates",
    "top_k_discords",
    "znorm",
    "write_plot_bundle",
    "write_report",
]
