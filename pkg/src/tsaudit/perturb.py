"""Seeded perturbations, anomaly injection, and detector invariance probes.

All randomness flows through a Philox counter-based generator keyed by
(seed, stream), so every fixture and probe replays identically regardless of
process or worker count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import Callable, Union

import numpy as np

from .model import Region, ScoreTrace, TimeSeries
from .scoring import location_hits

__all__ = [
    "AmplitudeScale",
    "ConstantFreeze",
    "Dropout",
    "GaussianNoise",
    "InjectionKind",
    "InjectionSpec",
    "LinearTrend",
    "Offset",
    "Perturbation",
    "ProbeReport",
    "ProbeResult",
    "UniformScaling",
    "WanderingBaseline",
    "apply_perturbation",
    "describe_perturbation",
    "inject_anomaly",
    "invariance_probe",
    "make_rng",
    "parse_perturbation",
]

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream).

    Philox is a documented counter-based algorithm, so draws depend only on
    the key, never on call interleaving across workers.
    """
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class AmplitudeScale:
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("scale factor must be positive")


@dataclass(frozen=True)
class Offset:
    b0: float


@dataclass(frozen=True)
class LinearTrend:
    slope: float


@dataclass(frozen=True)
class WanderingBaseline:
    step_sigma: float

    def __post_init__(self):
        if self.step_sigma < 0:
            raise ValueError("step_sigma must be >= 0")


@dataclass(frozen=True)
class UniformScaling:
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scaling factor must be positive")


@dataclass(frozen=True)
class Dropout:
    region: Region
    value: float = 0.0


@dataclass(frozen=True)
class ConstantFreeze:
    region: Region


Perturbation = Union[
    GaussianNoise,
    AmplitudeScale,
    Offset,
    LinearTrend,
    WanderingBaseline,
    UniformScaling,
    Dropout,
    ConstantFreeze,
]


def _check_region(region: Region, n: int) -> None:
    if region.end >= n:
        raise ValueError(f"region ({region.start}, {region.end}) exceeds series length {n}")


def apply_perturbation(ts: TimeSeries, p: Perturbation, seed: int = 0, stream: int = 0) -> TimeSeries:
    """Return a perturbed copy of the series; deterministic given (seed, stream).

    Identity parameters (sigma=0, a=1, b0=0, slope=0, step_sigma=0, factor=1)
    return the samples bit-for-bit unchanged. UniformScaling changes the
    length to round(n * factor) via linear interpolation and rescales
    train_end accordingly; everything else preserves length and train_end.
    """
    x = ts.values
    n = x.size
    train_end = ts.train_end
    if isinstance(p, GaussianNoise):
        y = x if p.sigma == 0 else x + make_rng(seed, stream).normal(0.0, p.sigma, n)
    elif isinstance(p, AmplitudeScale):
        y = x if p.a == 1 else x * p.a
    elif isinstance(p, Offset):
        y = x if p.b0 == 0 else x + p.b0
    elif isinstance(p, LinearTrend):
        y = x if p.slope == 0 else x + p.slope * np.arange(n)
    elif isinstance(p, WanderingBaseline):
        if p.step_sigma == 0:
            y = x
        else:
            y = x + np.cumsum(make_rng(seed, stream).normal(0.0, p.step_sigma, n))
    elif isinstance(p, UniformScaling):
        if p.factor == 1:
            y = x
        else:
            length = max(2, int(round(n * p.factor)))
            y = np.interp(np.linspace(0.0, n - 1, length), np.arange(n), x)
            if train_end is not None:
                train_end = min(max(1, int(round(train_end * p.factor))), length - 1)
    elif isinstance(p, Dropout):
        _check_region(p.region, n)
        y = x.copy()
        y[p.region.start : p.region.end + 1] = p.value
    elif isinstance(p, ConstantFreeze):
        _check_region(p.region, n)
        y = x.copy()
        y[p.region.start : p.region.end + 1] = x[p.region.start]
    else:
        raise TypeError(f"unknown perturbation {p!r}")
    return TimeSeries(ts.name, y, train_end)


_REGISTRY: dict[str, tuple[type, str | None]] = {
    "gaussian-noise": (GaussianNoise, "sigma"),
    "amplitude-scale": (AmplitudeScale, "a"),
    "offset": (Offset, "b0"),
    "linear-trend": (LinearTrend, "slope"),
    "wandering-baseline": (WanderingBaseline, "step_sigma"),
    "uniform-scaling": (UniformScaling, "factor"),
    "dropout": (Dropout, None),
    "constant-freeze": (ConstantFreeze, None),
}


def parse_perturbation(text: str) -> Perturbation:
    """Parse CLI syntax like ``gaussian-noise:0.5`` or ``dropout:start=10,end=20,value=0``.

    A bare value binds to the perturbation's primary parameter; region-based
    perturbations take start=/end= (and dropout optionally value=).
    """
    name, _, argtext = text.partition(":")
    name = name.strip()
    if name not in _REGISTRY:
        raise ValueError(f"unknown perturbation {name!r} (choose from {sorted(_REGISTRY)})")
    cls, primary = _REGISTRY[name]
    kwargs: dict[str, float] = {}
    if argtext.strip():
        for part in argtext.split(","):
            part = part.strip()
            if "=" in part:
                k, _, v = part.partition("=")
                kwargs[k.strip()] = float(v)
            elif primary is not None and primary not in kwargs:
                kwargs[primary] = float(part)
            else:
                raise ValueError(f"cannot interpret argument {part!r} for {name}")
    if cls in (Dropout, ConstantFreeze):
        allowed = {"start", "end"} | ({"value"} if cls is Dropout else set())
    else:
        allowed = {f.name for f in fields(cls)}
    unknown = set(kwargs) - allowed
    if unknown:
        raise ValueError(
            f"unknown parameter {sorted(unknown)[0]!r} for {name} (expected {sorted(allowed)})"
        )
    if cls in (Dropout, ConstantFreeze):
        if "start" not in kwargs or "end" not in kwargs:
            raise ValueError(f"{name} needs start= and end=")
        region = Region(int(kwargs.pop("start")), int(kwargs.pop("end")))
        return cls(region, **kwargs) if cls is Dropout else cls(region)
    return cls(**kwargs)


def describe_perturbation(p: Perturbation) -> str:
    """Inverse-ish of parse_perturbation, used in probe reports."""
    for name, (cls, _) in _REGISTRY.items():
        if type(p) is cls:
            if isinstance(p, (Dropout, ConstantFreeze)):
                args = f"start={p.region.start},end={p.region.end}"
                if isinstance(p, Dropout):
                    args += f",value={format(p.value, 'g')}"
            else:
                fields = vars(p)
                args = ",".join(f"{k}={format(v, 'g')}" for k, v in fields.items())
            return f"{name}({args})"
    return repr(p)


class InjectionKind(enum.Enum):
    SPIKE = "spike"
    DROPOUT = "dropout"
    FREEZE = "freeze"
    CYCLE_SPLICE = "cycle-splice"


@dataclass(frozen=True)
class InjectionSpec:
    """What to inject and where; location None means a seeded random draw.

    magnitude is in units of the clean series' sample std (spike height,
    dropout depth below the minimum). length applies to DROPOUT and FREEZE;
    CYCLE_SPLICE takes its length from the period (given, taken from the
    donor region, or estimated from the training prefix's autocorrelation).
    """

    kind: InjectionKind
    location: int | None = None
    length: int = 1
    magnitude: float = 10.0
    seed: int = 0
    donor: Region | None = None
    period: int | None = None

    def __post_init__(self):
        if not isinstance(self.kind, InjectionKind):
            object.__setattr__(self, "kind", InjectionKind(self.kind))
        if self.length < 1:
            raise ValueError("length must be >= 1")


def _estimate_period(x: np.ndarray, lo: int, hi: int) -> int:
    """Autocovariance argmax lag in [lo, hi]."""
    if hi < lo:
        raise ValueError("series too short to estimate a period")
    c = x - x.mean()
    size = 1
    while size < 2 * c.size:
        size *= 2
    spectrum = np.fft.rfft(c, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[: c.size]
    return lo + int(np.argmax(acov[lo : hi + 1]))


def inject_anomaly(clean: TimeSeries, spec: InjectionSpec) -> tuple[TimeSeries, Region]:
    """Plant a synthetic anomaly; returns the modified series and its region.

    Every modified sample lies inside the returned region. The random
    location (when requested) lands after the training prefix. CYCLE_SPLICE
    copies a period-length donor window onto the target, shifted so its first
    sample matches the original sample at the target start.
    """
    x = clean.values
    n = x.size
    rng = make_rng(spec.seed)
    kind = spec.kind

    if kind is InjectionKind.CYCLE_SPLICE:
        if spec.donor is not None and spec.period is not None and spec.donor.length != spec.period:
            raise ValueError("donor region length and period disagree")
        if spec.donor is not None:
            length = spec.donor.length
        elif spec.period is not None:
            length = spec.period
        else:
            prefix = x[: clean.train_end] if clean.train_end else x
            length = _estimate_period(prefix, 4, max(4, prefix.size // 4))
        if length > n // 4:
            raise ValueError("period longer than a quarter of the series")
        if length < 2:
            raise ValueError("period must be >= 2")
    else:
        length = 1 if kind is InjectionKind.SPIKE else spec.length

    lo = clean.train_end if clean.train_end is not None else 1
    hi = n - length  # last admissible start
    if spec.location is not None:
        loc = int(spec.location)
        if not 0 <= loc <= hi:
            raise ValueError(f"location {loc} leaves no room for length {length}")
    else:
        if lo > hi:
            raise ValueError("series too short for the requested injection")
        loc = int(rng.integers(lo, hi + 1))

    y = x.copy()
    scale = x.std(ddof=1)
    if kind is InjectionKind.SPIKE:
        y[loc] += spec.magnitude * scale
    elif kind is InjectionKind.DROPOUT:
        y[loc : loc + length] = x.min() - spec.magnitude * scale
    elif kind is InjectionKind.FREEZE:
        y[loc : loc + length] = x[loc]
    else:  # CYCLE_SPLICE
        if spec.donor is not None:
            donor_start = spec.donor.start
            if donor_start + length > n:
                raise ValueError("donor region exceeds series bounds")
            if abs(donor_start - loc) < length:
                raise ValueError("donor and target overlap")
        else:
            if loc - length < 0:
                raise ValueError("no room for a donor window left of the target")
            donor_start = int(rng.integers(0, loc - length + 1))
        seg = x[donor_start : donor_start + length]
        y[loc : loc + length] = seg - seg[0] + x[loc]
    return TimeSeries(clean.name, y, clean.train_end), Region(loc, loc + length - 1)


@dataclass(frozen=True)
class ProbeResult:
    perturbation: str
    argmax_before: int
    argmax_after: int | None
    hit_before: bool
    hit_after: bool | None
    error: str | None = None


@dataclass(frozen=True)
class ProbeReport:
    series: str
    detector: str
    truth: Region
    slop: int
    results: tuple[ProbeResult, ...]


def _probe_one(detector, ts, truth, slop, p, seed, stream):
    try:
        mutated = apply_perturbation(ts, p, seed=seed, stream=stream)
        trace: ScoreTrace = detector(mutated)
        predicted = trace.argmax_original()
        truth_after, slop_after = truth, slop
        if isinstance(p, UniformScaling) and p.factor != 1:
            f = p.factor
            length = len(mutated)
            start = min(length - 1, int(round(truth.start * f)))
            end = min(length - 1, max(start, int(round(truth.end * f))))
            truth_after = Region(start, end)
            slop_after = int(round(slop * f))
        hit = location_hits(predicted, truth_after.start, truth_after.end, slop_after)
        return predicted, hit, None
    except Exception as exc:  # detector failure is a probe datum, not a crash
        return None, None, f"{type(exc).__name__}: {exc}"


def invariance_probe(
    detector: Callable[[TimeSeries], ScoreTrace],
    ts: TimeSeries,
    truth: Region,
    perturbations,
    slop: int = 100,
    seed: int = 0,
    jobs: int = 1,
    detector_name: str = "detector",
) -> ProbeReport:
    """Compare a detector's argmax before and after each perturbation.

    The baseline trace is computed once on the clean series. Each perturbation
    draws from its own (seed, index) stream, so results are independent of
    evaluation order. Detector failures on a perturbed series are recorded on
    that row and the probe continues.
    """
    perturbations = list(perturbations)
    base_trace = detector(ts)
    before = base_trace.argmax_original()
    hit_before = location_hits(before, truth.start, truth.end, slop)

    def run(i: int, p: Perturbation) -> ProbeResult:
        after, hit_after, error = _probe_one(detector, ts, truth, slop, p, seed, i)
        return ProbeResult(describe_perturbation(p), before, after, hit_before, hit_after, error)

    if jobs != 1 and len(perturbations) > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(run)(i, p) for i, p in enumerate(perturbations)
        )
    else:
        results = [run(i, p) for i, p in enumerate(perturbations)]
    return ProbeReport(ts.name, detector_name, truth, slop, tuple(results))
