import numpy as np
import pytest

from tsaudit import (
    AuditConfig,
    Family,
    LabelSet,
    Region,
    SearchGrid,
    TimeSeries,
    audit_series,
    run_audit,
    summary_table,
    write_report,
)
from tsaudit.report import compute_aggregates

from conftest import (
    biased_corpus,
    dense_fixture,
    sine,
    spike_fixture,
    twin_fixture,
    uniform_corpus,
)


class TestAuditConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            AuditConfig(tolerances=())
        with pytest.raises(ValueError):
            AuditConfig(tolerances=(1, -1))
        with pytest.raises(ValueError):
            AuditConfig(sublen=3)

    def test_families_normalized_from_strings(self):
        cfg = AuditConfig(families=("abs-diff-thresh", Family.CONST_RUN))
        assert cfg.families == (Family.ABS_DIFF_THRESH, Family.CONST_RUN)

    def test_echo_excludes_jobs(self):
        d = AuditConfig(jobs=4).to_dict()
        assert "jobs" not in d
        assert d["tolerances"] == [1] and d["seed"] == 0


class TestAuditSeries:
    def test_spike_record_shape(self):
        ts, labels = spike_fixture(0)
        rec = audit_series(ts, labels)
        assert rec["series_id"] == ts.name and rec["n"] == len(ts)
        assert rec["train_end"] == 500
        assert rec["labels"]["regions"] == [list(r.as_tuple()) for r in labels.regions]

        triv = rec["triviality"][0]
        assert triv["tolerance"] == 1 and triv["solved"] is True
        assert triv["spec"]["family"] in {f.value for f in Family}
        assert isinstance(triv["expression"], str) and "TS" in triv["expression"]
        assert rec["flags"][0] == "TRIVIAL"

        assert rec["density"]["region_count"] == 1
        assert 0 < rec["density"]["anomaly_fraction"] < 1 / 3

        loc = labels.regions[0].end
        assert rec["position"]["relative_position"] == loc / (len(ts) - 1)

        assert rec["discord"]["sublen"] >= 4
        assert len(rec["discord"]["top"]) == 3
        assert all(set(t) == {"location", "score"} for t in rec["discord"]["top"])

    def test_dense_fixture_raises_high_density(self):
        ts, labels = dense_fixture(0)
        rec = audit_series(ts, labels)
        assert "HIGH_DENSITY" in rec["flags"]

    def test_twin_fixture_raises_fn_candidate(self):
        ts, labels, twin = twin_fixture(0)
        rec = audit_series(ts, labels)
        assert "FN_CANDIDATE" in rec["flags"]
        fns = [f for f in rec["consistency"]["findings"] if f["kind"] == "FN_CANDIDATE"]
        assert any(
            Region(*f["location"]).intersects(twin) for f in fns
        )

    def test_short_series_skips_window_stages(self):
        x = np.array([0.0, 1.0, 0.0, 5.0, 0.0, 1.0])
        rec = audit_series(TimeSeries("tiny", x), LabelSet((Region(3, 3),), 6))
        assert "skipped" in rec["consistency"] and "skipped" in rec["discord"]
        assert rec["triviality"][0]["solved"] is True

    def test_unlabeled_rejected(self):
        ts, _ = spike_fixture(1)
        with pytest.raises(ValueError, match="no labels"):
            audit_series(ts, LabelSet((), len(ts)))

    def test_label_length_mismatch(self):
        ts, _ = spike_fixture(1)
        with pytest.raises(ValueError, match="disagree"):
            audit_series(ts, LabelSet((Region(3, 3),), len(ts) + 1))

    def test_multiple_tolerances_one_entry_each(self):
        ts, labels = spike_fixture(2)
        rec = audit_series(ts, labels, AuditConfig(tolerances=(0, 1, 2)))
        assert [t["tolerance"] for t in rec["triviality"]] == [0, 1, 2]
        solved = [t["solved"] for t in rec["triviality"]]
        assert solved == sorted(solved)  # larger tolerance never unsolves


class TestRunAudit:
    def _corpus(self, count=6):
        return [(ts, labels) for ts, labels, _ in biased_corpus(count=count, terminal=count)]

    def test_aggregates_match_records(self):
        report = run_audit(self._corpus())
        assert report.aggregates == compute_aggregates(report.series)
        assert report.aggregates["series_count"] == 6

    def test_terminal_corpus_flags_run_to_failure(self):
        report = run_audit(self._corpus())
        assert report.aggregates["position_bias"]["run_to_failure"] is True
        assert report.flagged

    def test_uniform_corpus_does_not(self):
        corpus = [(ts, labels) for ts, labels, _ in uniform_corpus(count=10)]
        report = run_audit(corpus)
        assert report.aggregates["position_bias"]["run_to_failure"] is False

    def test_jobs_do_not_change_bytes(self, tmp_path):
        corpus = self._corpus(4)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_report(run_audit(corpus, AuditConfig(jobs=1)), a)
        write_report(run_audit(corpus, AuditConfig(jobs=3)), b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="corpus is empty"):
            run_audit([])

    def test_unlabeled_series_rejected_up_front(self):
        ts, labels = spike_fixture(3)
        with pytest.raises(ValueError, match="no labels"):
            run_audit([(ts, labels), (ts, None)])


class TestSummaryTable:
    def test_contents(self):
        corpus = [(ts, labels) for ts, labels, _ in biased_corpus(count=6, terminal=6)]
        report = run_audit(corpus)
        text = summary_table(report)
        assert "series audited: 6" in text
        assert "solved (w=1): 6/6 (100.0%)" in text
        assert "mean relative anomaly position:" in text
        assert "RUN_TO_FAILURE" in text
        assert "TRIVIAL" in text  # flag counts section

    def test_no_flags_line(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0.0, 1.0, 300)
        ts = TimeSeries("noise", x)
        labels = LabelSet((Region(120, 121),), 300)
        report = run_audit([(ts, labels)], AuditConfig(grid=SearchGrid(max_b_candidates=8)))
        rec = report.series[0]
        if not rec["flags"]:
            assert "flag counts: none" in summary_table(report)
