"""Detector adapters: scikit-learn style estimators plus the named detector
registry behind the CLI's --detector option.

The estimators wrap the functional core so the detectors compose with the
wider ecosystem (get_params / set_params, clone, pipelines). Named detectors
produce ScoreTrace objects; location detectors reduce a trace to one index
via argmax with alignment correction.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator

from .discord import DiscordParams, discord_score
from .model import Alignment, LabelSet, ScoreTrace, TimeSeries, as_float_array, regions_from_flags
from .oneliner import (
    Family,
    OneLinerSpec,
    SearchGrid,
    SolveCriterion,
    apply_oneliner,
    brute_force_search,
    expression,
)

__all__ = [
    "DiscordDetector",
    "OneLinerDetector",
    "make_location_detector",
    "make_trace_detector",
]


def _as_series(X, name: str = "series") -> TimeSeries:
    if isinstance(X, TimeSeries):
        return X
    return TimeSeries(name, as_float_array(X, name="X"))


def _as_labels(y, n: int) -> LabelSet:
    if isinstance(y, LabelSet):
        return y
    arr = np.asarray(y)
    if arr.ndim != 1 or arr.size != n:
        raise ValueError("y must be a per-sample 0/1 vector matching the series length")
    return regions_from_flags(arr)


class OneLinerDetector(BaseEstimator):
    """One-expression detector with search-in-fit.

    With ``family`` set, fit just validates the fixed parameters. With
    ``family=None``, fit runs the brute-force search against the labels ``y``
    (a 0/1 vector or a LabelSet) and stores the first solving spec, if any.

    Attributes after fit:
        spec_: the active OneLinerSpec, or None when a search found nothing.
        solved_: search outcome (None when no search was run).
    """

    def __init__(
        self,
        family: str | Family | None = None,
        u: int = 0,
        k: int = 1,
        c: float = 0.0,
        b: float = 0.0,
        run_len: int = 3,
        tolerance: int = 1,
        grid: SearchGrid | None = None,
        families=None,
    ):
        self.family = family
        self.u = u
        self.k = k
        self.c = c
        self.b = b
        self.run_len = run_len
        self.tolerance = tolerance
        self.grid = grid
        self.families = families

    def fit(self, X, y=None):
        series = _as_series(X)
        if self.family is not None:
            self.spec_ = OneLinerSpec(
                Family(self.family), u=self.u, k=self.k, c=self.c, b=self.b, run_len=self.run_len
            )
            self.solved_ = None
            return self
        if y is None:
            raise ValueError("searching for a one-liner requires labels y")
        labels = _as_labels(y, len(series))
        self.spec_ = brute_force_search(
            series,
            labels,
            families=self.families,
            grid=self.grid if self.grid is not None else SearchGrid(),
            criterion=SolveCriterion(self.tolerance),
        )
        self.solved_ = self.spec_ is not None
        return self

    def predict(self, X) -> np.ndarray:
        """Per-sample 0/1 flag vector under the fitted spec."""
        if not hasattr(self, "spec_"):
            raise ValueError("fit must run before predict")
        if self.spec_ is None:
            raise ValueError("no solving one-liner was found; nothing to predict with")
        series = _as_series(X)
        out = np.zeros(len(series), dtype=np.intp)
        out[apply_oneliner(self.spec_, series)] = 1
        return out

    def expression_(self) -> str:
        if not hasattr(self, "spec_") or self.spec_ is None:
            raise ValueError("no fitted spec to render")
        return expression(self.spec_)


class DiscordDetector(BaseEstimator):
    """Stateless discord scorer behind a fit/score_samples surface."""

    def __init__(self, sublen: int = 128, exclusion: int | None = None, znorm_eps: float = 1e-8):
        self.sublen = sublen
        self.exclusion = exclusion
        self.znorm_eps = znorm_eps

    def _params(self) -> DiscordParams:
        return DiscordParams(self.sublen, self.exclusion, self.znorm_eps)

    def fit(self, X, y=None):
        self._params()  # validate early
        _as_series(X)
        self.fitted_ = True
        return self

    def score_trace(self, X) -> ScoreTrace:
        return discord_score(_as_series(X), self._params())

    def score_samples(self, X) -> np.ndarray:
        """Anomaly score per sample; NaN where no window starts."""
        series = _as_series(X)
        trace = self.score_trace(series)
        out = np.full(len(series), np.nan)
        out[trace.offset : trace.offset + len(trace)] = trace.scores
        return out

    def locate(self, X) -> int:
        """Original-coordinate start of the top discord window."""
        return self.score_trace(X).argmax_original()


def _parse_kwargs(argtext: str) -> dict[str, str]:
    kwargs: dict[str, str] = {}
    if argtext.strip():
        for part in argtext.split(","):
            k, eq, v = part.strip().partition("=")
            if not eq:
                raise ValueError(f"detector arguments must be key=value, got {part!r}")
            kwargs[k.strip()] = v.strip()
    return kwargs


def _pointwise(scores: np.ndarray) -> ScoreTrace:
    return ScoreTrace(scores, Alignment.SUBSEQ_START, 0)


def make_trace_detector(text: str) -> tuple[str, Callable[[TimeSeries], ScoreTrace]]:
    """Build a named detector from CLI syntax.

    Supported: ``discord[:sublen=...,exclusion=...]``,
    ``oneliner:family=...[,b=...,k=...,c=...,u=...,run_len=...]``,
    ``last-point``, ``global-max``.
    """
    name, _, argtext = text.partition(":")
    name = name.strip()
    kwargs = _parse_kwargs(argtext)

    if name == "discord":
        params = DiscordParams(
            sublen=int(kwargs.pop("sublen", 128)),
            exclusion=int(kwargs["exclusion"]) if "exclusion" in kwargs else None,
            znorm_eps=float(kwargs.pop("znorm_eps", 1e-8)),
        )
        kwargs.pop("exclusion", None)
        if kwargs:
            raise ValueError(f"unknown discord arguments: {sorted(kwargs)}")

        def detect(ts: TimeSeries) -> ScoreTrace:
            return discord_score(ts, params)

        return text, detect

    if name == "oneliner":
        if "family" not in kwargs:
            raise ValueError("oneliner detector needs family=...")
        spec = OneLinerSpec(
            Family(kwargs.pop("family")),
            u=int(kwargs.pop("u", 0)),
            k=int(kwargs.pop("k", 1)),
            c=float(kwargs.pop("c", 0.0)),
            b=float(kwargs.pop("b", 0.0)),
            run_len=int(kwargs.pop("run_len", 3)),
        )
        if kwargs:
            raise ValueError(f"unknown oneliner arguments: {sorted(kwargs)}")

        def detect(ts: TimeSeries) -> ScoreTrace:
            scores = np.zeros(len(ts))
            scores[apply_oneliner(spec, ts)] = 1.0
            return _pointwise(scores)

        return text, detect

    if name == "last-point":
        if kwargs:
            raise ValueError("last-point takes no arguments")

        def detect(ts: TimeSeries) -> ScoreTrace:
            scores = np.zeros(len(ts))
            scores[-1] = 1.0
            return _pointwise(scores)

        return text, detect

    if name == "global-max":
        if kwargs:
            raise ValueError("global-max takes no arguments")

        def detect(ts: TimeSeries) -> ScoreTrace:
            return _pointwise(ts.values.copy())

        return text, detect

    raise ValueError(
        f"unknown detector {name!r} (choose from discord, oneliner, last-point, global-max)"
    )


def make_location_detector(text: str) -> tuple[str, Callable[[np.ndarray, TimeSeries], int]]:
    """Location form of a named detector: argmax with alignment correction."""
    name, detect = make_trace_detector(text)

    def locate(_train: np.ndarray, ts: TimeSeries) -> int:
        return detect(ts).argmax_original()

    return name, locate
