"""Command-line surface: batch audits, baselines, scoring, and fixtures.

Exit codes are part of the contract: 0 success, 1 usage errors (bad flags,
bad detector or perturbation syntax, window longer than half the series),
2 runtime errors (I/O, malformed data), 3 when --fail-on-flaw is set and the
audit found flaws. Every command with fixed inputs, flags, and seed writes
byte-identical machine outputs for any --jobs value.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import AuditConfig, run_audit, summary_table
from .detectors import make_trace_detector
from .discord import DiscordParams, discord_score, top_k_discords
from .ingest import IngestError, SeriesFormat, detect_format, load_series, sidecar_path
from .model import LabelSet, TimeSeries
from .oneliner import (
    Family,
    OneLinerSpec,
    SearchGrid,
    SolveCriterion,
    apply_oneliner,
    brute_force_search,
    expression,
    is_solved,
)
from .perturb import InjectionSpec, inject_anomaly, invariance_probe, parse_perturbation
from .report import ReportError, write_plot_bundle, write_report
from .scoring import location_hits

__all__ = ["main"]

_FORMATS = ["auto"] + [f.value for f in SeriesFormat]

DEFAULT_PROBES = [
    "gaussian-noise:0.1",
    "amplitude-scale:2",
    "offset:10",
    "linear-trend:0.01",
    "wandering-baseline:0.1",
    "uniform-scaling:1.25",
]


class UsageError(Exception):
    """Bad arguments discovered after argparse; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format",
        choices=_FORMATS,
        default="auto",
        help="input layout (default: sidecar file, then UCR-style name, then .csv)",
    )
    p.add_argument(
        "--config",
        metavar="FILE",
        help="key=value file whose keys mirror this command's long flags;"
        " explicit flags win",
    )


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-candidates", nargs="+", type=int, metavar="K",
                   help="moving-window lengths to try (must include 5)")
    p.add_argument("--c-candidates", nargs="+", type=float, metavar="C",
                   help="envelope coefficients to try (must include 0)")
    p.add_argument("--max-b-candidates", type=int, metavar="N",
                   help="cap on threshold candidates per signal (default 512)")
    p.add_argument("--families", nargs="+", choices=[f.value for f in Family],
                   metavar="FAMILY", help="restrict the search to these families")


def build_parser() -> tuple[_Parser, argparse._SubParsersAction]:
    parser = _Parser(
        prog="tsaudit",
        description="Audit labeled anomaly-detection series for benchmark flaws,"
        " run baselines, and score detectors.",
    )
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("audit", help="run every flaw analysis over labeled series")
    p.add_argument("inputs", nargs="+", metavar="PATH", help="series files or directories")
    p.add_argument("--tolerance", nargs="+", type=int, default=[1], metavar="W",
                   help="solve-criterion tolerances; each gets its own solved fraction")
    _add_grid(p)
    p.add_argument("--sublen", type=int,
                   help="window length for the consistency scan and discord summary"
                   " (default: longest labeled region, clamped to [4, n//2])")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="consistency-scan threshold factor (default 0.5)")
    p.add_argument("--slop", type=int, default=100,
                   help="location tolerance for the last-point hit rate (default 100)")
    p.add_argument("--high-density-fraction", type=float, default=1.0 / 3.0,
                   help="HIGH_DENSITY threshold on the largest region (default 1/3)")
    p.add_argument("--sandwich-gap", type=int, default=2,
                   help="SANDWICH threshold on the smallest inter-region gap (default 2)")
    p.add_argument("--run-to-failure-threshold", type=float, default=0.7,
                   help="mean relative position above which the corpus is flagged (default 0.7)")
    p.add_argument("--topk", type=int, default=3, help="discords per series in the report")
    p.add_argument("--out", metavar="PATH", help="write the audit report here")
    p.add_argument("--plots", metavar="DIR", help="write one plot bundle per series here")
    p.add_argument("--svg", action="store_true", help="also render SVG charts with --plots")
    p.add_argument("--fail-on-flaw", action="store_true",
                   help="exit 3 when any flaw flag is raised")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--seed", type=int, default=0, help="seed for the consistency scan sample")
    _add_common(p)
    p.set_defaults(func=cmd_audit)

    p = subs.add_parser("oneliner", help="search for, or apply, a one-line detector")
    p.add_argument("file", help="labeled series file")
    p.add_argument("--search", action="store_true", help="brute-force the family grid")
    p.add_argument("--family", choices=[f.value for f in Family],
                   help="apply one family instead of searching")
    p.add_argument("--params", metavar="K=V[,K=V...]",
                   help="parameters for --family: u, k, c, b, run_len")
    p.add_argument("--tolerance", type=int, default=1, metavar="W",
                   help="solve-criterion tolerance (default 1)")
    _add_grid(p)
    _add_common(p)
    p.set_defaults(func=cmd_oneliner)

    p = subs.add_parser("discord", help="nearest-neighbor discord baseline on one series")
    p.add_argument("file", help="series file (labels optional)")
    p.add_argument("--sublen", type=int, default=128, metavar="M",
                   help="window length (default 128; must satisfy m <= n/2)")
    p.add_argument("--exclusion", type=int, help="trivial-match exclusion (default m//2)")
    p.add_argument("--topk", type=int, default=3, help="how many discords to print")
    p.add_argument("--out", metavar="PATH", help="write a plot bundle here")
    p.add_argument("--svg", metavar="PATH", help="also render an SVG chart here")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    _add_common(p)
    p.set_defaults(func=cmd_discord)

    p = subs.add_parser("score", help="location accuracy of per-series predictions")
    p.add_argument("inputs", nargs="+", metavar="PATH", help="labeled series files or directories")
    p.add_argument("--pred", required=True, metavar="FILE",
                   help="prediction file: one 'series_name index' pair per line")
    p.add_argument("--slop", type=int, default=100,
                   help="tolerance around the labeled interval (default 100)")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = subs.add_parser("inject", help="plant a synthetic anomaly into a series")
    p.add_argument("file", help="clean series file")
    p.add_argument("--kind", required=True,
                   choices=["spike", "dropout", "freeze", "cycle-splice"])
    p.add_argument("--location", type=int, help="start index (default: seeded random draw)")
    p.add_argument("--length", type=int, default=1, help="samples affected (default 1)")
    p.add_argument("--magnitude", type=float, default=10.0,
                   help="size in units of the series' sample std (default 10)")
    p.add_argument("--period", type=int,
                   help="cycle length for cycle-splice (default: estimated)")
    p.add_argument("--seed", type=int, default=0, help="seed for random placement")
    p.add_argument("--out", required=True, metavar="PATH",
                   help="output series file; truth goes to a .labels.json sidecar")
    _add_common(p)
    p.set_defaults(func=cmd_inject)

    p = subs.add_parser("probe", help="re-run a detector under label-preserving perturbations")
    p.add_argument("file", help="series file with exactly one labeled region")
    p.add_argument("--detector", required=True, metavar="SPEC",
                   help="discord[:k=v,...], oneliner:family=...[,k=v...],"
                   " last-point, or global-max")
    p.add_argument("--perturbations", nargs="+", default=DEFAULT_PROBES, metavar="SPEC",
                   help="e.g. gaussian-noise:0.5 amplitude-scale:2"
                   " dropout:start=10,end=20 (default: a standard battery)")
    p.add_argument("--slop", type=int, default=100,
                   help="location tolerance for hits (default 100)")
    p.add_argument("--seed", type=int, default=0, help="seed for stochastic perturbations")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    _add_common(p)
    p.set_defaults(func=cmd_probe)

    return parser, subs


def _coerce_config_value(action: argparse.Action, key: str, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"configuration key {key!r} expects a boolean, got {value!r}")
    convert = action.type if action.type is not None else str
    try:
        if action.nargs in ("+", "*"):
            parts = value.split()
            if not parts:
                raise ValueError("empty list")
            out = [convert(part) for part in parts]
        else:
            out = convert(value)
    except ValueError as exc:
        raise UsageError(f"configuration key {key!r}: bad value {value!r} ({exc})") from None
    values = out if isinstance(out, list) else [out]
    if action.choices is not None and any(v not in action.choices for v in values):
        raise UsageError(
            f"configuration key {key!r}: {value!r} not in {sorted(action.choices)}"
        )
    return out


def _apply_config_file(parser, subs, args, argv):
    """Load --config defaults into the subcommand and re-parse (flags win)."""
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestError(path, f"cannot read config: {exc.strerror or exc}") from None
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise IngestError(path, "expected key=value", line_no)
        entries[key.strip()] = value.strip()
    sub = subs.choices[args.command]
    by_flag = {
        opt[2:]: action
        for action in sub._actions
        for opt in action.option_strings
        if opt.startswith("--")
    }
    defaults = {}
    for key, value in entries.items():
        if key == "config":
            continue
        action = by_flag.get(key)
        if action is None:
            raise UsageError(
                f"unknown configuration key {key!r} for command {args.command!r}"
            )
        defaults[action.dest] = _coerce_config_value(action, key, value)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _fmt_arg(args) -> SeriesFormat | None:
    return None if args.format == "auto" else SeriesFormat(args.format)


def _collect_files(inputs, fmt: SeriesFormat | None) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            for child in sorted(p.iterdir()):
                if not child.is_file() or child.name.endswith(".labels.json"):
                    continue
                if fmt is None:
                    try:
                        detect_format(child)
                    except IngestError:
                        print(f"skipping {child}: unrecognized series format", file=sys.stderr)
                        continue
                paths.append(child)
        elif p.is_file():
            paths.append(p)
        else:
            raise IngestError(p, "no such file")
    if not paths:
        raise IngestError(inputs[0], "no input series found")
    return paths


def _load_labeled_corpus(inputs, fmt) -> list[tuple[TimeSeries, LabelSet, Path]]:
    corpus = []
    for p in _collect_files(inputs, fmt):
        ts, labels = load_series(p, fmt)
        if labels is None or labels.is_empty:
            raise IngestError(p, "series has no labels")
        corpus.append((ts, labels, p))
    return corpus


def _grid_from(args) -> SearchGrid:
    base = SearchGrid()
    try:
        return SearchGrid(
            k_candidates=tuple(args.k_candidates) if args.k_candidates else base.k_candidates,
            c_candidates=tuple(args.c_candidates) if args.c_candidates else base.c_candidates,
            max_b_candidates=args.max_b_candidates or base.max_b_candidates,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_audit(args) -> int:
    fmt = _fmt_arg(args)
    corpus = _load_labeled_corpus(args.inputs, fmt)
    try:
        config = AuditConfig(
            tolerances=tuple(args.tolerance),
            families=tuple(args.families) if args.families else None,
            grid=_grid_from(args),
            sublen=args.sublen,
            alpha=args.alpha,
            slop=args.slop,
            high_density_fraction=args.high_density_fraction,
            sandwich_gap=args.sandwich_gap,
            run_to_failure_threshold=args.run_to_failure_threshold,
            discord_topk=args.topk,
            seed=args.seed,
            jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_audit([(ts, labels) for ts, labels, _ in corpus], config)
    if args.out:
        write_report(report, args.out)
    if args.plots:
        plots = Path(args.plots)
        plots.mkdir(parents=True, exist_ok=True)
        for (ts, labels, _), record in zip(corpus, report.series):
            traces = []
            if "top" in record["discord"]:
                params = DiscordParams(record["discord"]["sublen"],
                                       record["discord"]["exclusion"])
                traces.append(("discord", discord_score(ts, params)))
            write_plot_bundle(
                ts, labels, traces, plots / f"{ts.name}.tsv",
                svg_path=plots / f"{ts.name}.svg" if args.svg else None,
            )
    print(summary_table(report))
    if args.fail_on_flaw and report.flagged:
        return 3
    return 0


_SPEC_INT_KEYS = {"u", "k", "run_len"}
_SPEC_FLOAT_KEYS = {"c", "b"}


def _parse_spec_params(family: Family, text: str | None) -> OneLinerSpec:
    kwargs: dict[str, object] = {}
    for part in (text or "").split(","):
        part = part.strip()
        if not part:
            continue
        key, eq, value = part.partition("=")
        key = key.strip()
        if not eq:
            raise UsageError(f"--params entries must be key=value, got {part!r}")
        try:
            if key in _SPEC_INT_KEYS:
                kwargs[key] = int(value)
            elif key in _SPEC_FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                raise UsageError(f"unknown one-liner parameter {key!r}")
        except ValueError as exc:
            raise UsageError(f"--params {key}: {exc}") from None
    if family is Family.CONST_RUN and "run_len" not in kwargs:
        kwargs["run_len"] = 3
    try:
        return OneLinerSpec(family, **kwargs)  # type: ignore[arg-type]
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_oneliner(args) -> int:
    if args.search == (args.family is not None):
        raise UsageError("pass exactly one of --search or --family")
    ts, labels = load_series(args.file, _fmt_arg(args))
    try:
        criterion = SolveCriterion(args.tolerance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.search:
        if labels is None or labels.is_empty:
            raise IngestError(args.file, "the search needs labels")
        spec = brute_force_search(
            ts, labels,
            tuple(args.families) if args.families else None,
            _grid_from(args), criterion,
        )
        if spec is None:
            print("no solving one-liner found")
            return 0
        print(f"solving one-liner: {expression(spec)}")
        print(
            f"family: {spec.family.value}  u={spec.u} k={spec.k}"
            f" c={spec.c:g} b={spec.b:g} run_len={spec.run_len}"
        )
        return 0
    spec = _parse_spec_params(Family(args.family), args.params)
    flags = apply_oneliner(spec, ts)
    print(f"expression: {expression(spec)}")
    print("flags: " + (" ".join(str(int(i)) for i in flags) if len(flags) else "none"))
    if labels is not None and not labels.is_empty:
        verdict = "yes" if is_solved(flags, labels, criterion) else "no"
        print(f"solves (w={criterion.w}): {verdict}")
    return 0


def cmd_discord(args) -> int:
    ts, labels = load_series(args.file, _fmt_arg(args))
    try:
        params = DiscordParams(args.sublen, args.exclusion)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if 2 * params.sublen > len(ts):
        raise UsageError(
            f"sublen {params.sublen} too long for {len(ts)} samples (need sublen <= n/2)"
        )
    trace = discord_score(ts, params, jobs=args.jobs)
    for rank, j in enumerate(top_k_discords(trace, args.topk), 1):
        print(f"discord {rank}: index {trace.to_original_index(j)}"
              f" score {trace.scores[j]:.6g}")
    if args.out:
        write_plot_bundle(ts, labels, [("discord", trace)], args.out, svg_path=args.svg)
    return 0


def _read_predictions(path) -> dict[str, int]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise IngestError(p, f"cannot read predictions: {exc.strerror or exc}") from None
    preds: dict[str, int] = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise IngestError(p, "expected 'series_name index'", line_no)
        try:
            preds[fields[0]] = int(fields[1])
        except ValueError:
            raise IngestError(p, f"non-integer index {fields[1]!r}", line_no) from None
    return preds


def cmd_score(args) -> int:
    preds = _read_predictions(args.pred)
    corpus = _load_labeled_corpus(args.inputs, _fmt_arg(args))
    if args.slop < 0:
        raise UsageError("slop must be >= 0")
    used = set()
    correct = 0
    for ts, labels, path in corpus:
        predicted = preds.get(ts.name)
        key = ts.name
        if predicted is None:
            predicted = preds.get(path.name)
            key = path.name
        if predicted is None:
            print(f"warning: no prediction for {ts.name}, counted incorrect",
                  file=sys.stderr)
            print(f"missing   {ts.name}")
            continue
        used.add(key)
        hit = any(
            location_hits(predicted, r.start, r.end, args.slop) for r in labels.regions
        )
        correct += 1 if hit else 0
        print(f"{'correct' if hit else 'incorrect'} {ts.name} {predicted}")
    for name in sorted(set(preds) - used):
        print(f"warning: prediction for unknown series {name!r} ignored", file=sys.stderr)
    total = len(corpus)
    print(f"accuracy: {correct / total:.3f} ({correct}/{total})")
    return 0


def cmd_inject(args) -> int:
    ts, _ = load_series(args.file, _fmt_arg(args))
    try:
        spec = InjectionSpec(
            kind=args.kind,
            location=args.location,
            length=args.length,
            magnitude=args.magnitude,
            period=args.period,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mutated, region = inject_anomaly(ts, spec)
    out = Path(args.out)
    out.write_text(
        "\n".join(repr(float(v)) for v in mutated.values) + "\n", newline="\n"
    )
    side = sidecar_path(out)
    side.write_text(
        json.dumps(
            {"regions": [[region.start, region.end]], "train_end": mutated.train_end},
            indent=2,
        )
        + "\n",
        newline="\n",
    )
    print(f"injected {args.kind} at [{region.start}, {region.end}]")
    print(f"wrote {out} and {side}")
    return 0


def cmd_probe(args) -> int:
    ts, labels = load_series(args.file, _fmt_arg(args))
    if labels is None or labels.is_empty:
        raise IngestError(args.file, "the probe needs a labeled series")
    if len(labels.regions) != 1:
        raise IngestError(
            args.file,
            f"the probe needs exactly one labeled region, found {len(labels.regions)}",
        )
    truth = labels.regions[0]
    try:
        name, detector = make_trace_detector(args.detector)
        perturbations = [parse_perturbation(t) for t in args.perturbations]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = invariance_probe(
        detector, ts, truth, perturbations,
        slop=args.slop, seed=args.seed, jobs=args.jobs, detector_name=name,
    )
    print(f"detector: {name}")
    print(f"truth: [{truth.start}, {truth.end}]  slop: {args.slop}")
    first = report.results[0]
    print(f"baseline: argmax {first.argmax_before}"
          f" ({'hit' if first.hit_before else 'miss'})")
    width = max(len(r.perturbation) for r in report.results)
    for r in report.results:
        if r.error is not None:
            print(f"{r.perturbation:<{width}}  error: {r.error}")
        else:
            state = "hit" if r.hit_after else "miss"
            print(f"{r.perturbation:<{width}}  argmax {r.argmax_after} ({state})")
    return 0


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _apply_config_file(parser, subs, args, argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IngestError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # runtime failures map to 2, per the exit contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
