import json

import numpy as np
import pytest

from tsaudit import IngestError, Region, SeriesFormat, detect_format, load_series
from tsaudit.ingest import sidecar_path

from conftest import sine


def _write(path, text):
    path.write_text(text)
    return path


def _ucr_file(tmp_path, name="UCR_Anomaly_BIDMC1_20_40_45.txt", n=60):
    body = "\n".join(f"{v:.6f}" for v in sine(n, seed=4)) + "\n"
    return _write(tmp_path / name, body)


class TestUcrFormat:
    def test_filename_drives_metadata(self, tmp_path):
        ts, labels = load_series(_ucr_file(tmp_path))
        assert len(ts) == 60 and ts.train_end == 20
        assert labels.regions == (Region(40, 45),)
        assert ts.name == "UCR_Anomaly_BIDMC1_20_40_45"

    def test_reference_name(self, tmp_path):
        path = _ucr_file(tmp_path, "UCR_Anomaly_BIDMC1_2500_5400_5600.txt", n=5601)
        ts, labels = load_series(path)
        assert ts.train_end == 2500
        assert labels.regions == (Region(5400, 5600),)

    def test_interval_must_fit_the_series(self, tmp_path):
        path = _ucr_file(tmp_path, "UCR_Anomaly_x_20_40_70.txt", n=60)
        with pytest.raises(IngestError, match="ends at 70 but the series has 60"):
            load_series(path)

    def test_non_numeric_line_is_located(self, tmp_path):
        path = _write(tmp_path / "UCR_Anomaly_x_2_4_5.txt", "1\n2\nabc\n4\n5\n6\n")
        with pytest.raises(IngestError) as exc:
            load_series(path)
        assert exc.value.line == 3
        assert str(exc.value).startswith(f"{path}:3:")

    def test_non_finite_value_rejected(self, tmp_path):
        path = _write(tmp_path / "UCR_Anomaly_x_2_4_5.txt", "1\n2\nnan\n4\n5\n6\n")
        with pytest.raises(IngestError, match="finite"):
            load_series(path)

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path / "UCR_Anomaly_x_2_4_5.txt", "")
        with pytest.raises(IngestError, match="empty"):
            load_series(path)

    def test_trailing_blanks_ok_interior_blank_not(self, tmp_path):
        path = _write(tmp_path / "UCR_Anomaly_x_2_4_5.txt", "1\n2\n3\n4\n5\n6\n\n\n")
        ts, _ = load_series(path)
        assert len(ts) == 6
        path = _write(tmp_path / "UCR_Anomaly_y_2_4_5.txt", "1\n2\n\n4\n5\n6\n")
        with pytest.raises(IngestError, match="blank line") as exc:
            load_series(path)
        assert exc.value.line == 3


class TestCsvFormat:
    def test_value_label_columns(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1.0,0\n2.0,1\n1.0,0\n")
        ts, labels = load_series(path)
        assert len(ts) == 3
        assert labels.regions == (Region(1, 1),)

    def test_single_column_has_no_labels(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1.0\n2.0\n3.0\n")
        ts, labels = load_series(path)
        assert len(ts) == 3 and labels is None

    def test_header_is_skipped(self, tmp_path):
        path = _write(tmp_path / "a.csv", "value,label\n1.0,0\n2.0,1\n")
        ts, labels = load_series(path)
        assert len(ts) == 2
        assert labels.regions == (Region(1, 1),)

    def test_timestamp_column_detected_and_ignored(self, tmp_path):
        path = _write(tmp_path / "a.csv", "2014-07-01 00:00,10.5\n2014-07-01 00:30,11.0\n")
        ts, labels = load_series(path)
        assert np.array_equal(ts.values, [10.5, 11.0])
        assert labels is None

    def test_three_columns(self, tmp_path):
        path = _write(tmp_path / "a.csv", "t0,1.0,0\nt1,2.0,1\nt2,3.0,1\n")
        ts, labels = load_series(path)
        assert np.array_equal(ts.values, [1.0, 2.0, 3.0])
        assert labels.regions == (Region(1, 2),)

    def test_all_zero_labels_give_empty_set(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1.0,0\n2.0,0\n")
        _, labels = load_series(path)
        assert labels is not None and labels.is_empty

    def test_bad_label_value(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1.0,0\n2.0,2\n")
        with pytest.raises(IngestError, match="label must be 0 or 1") as exc:
            load_series(path)
        assert exc.value.line == 2

    def test_parse_error_names_line_one(self, tmp_path):
        path = _write(tmp_path / "a.csv", "abc\n")
        with pytest.raises(IngestError) as exc:
            load_series(path)
        assert exc.value.line == 1
        assert str(exc.value).startswith(f"{path}:1:")

    def test_ragged_row(self, tmp_path):
        path = _write(tmp_path / "a.csv", "t0,1.0,0\nt1,2.0\n")
        with pytest.raises(IngestError, match="expected 3 columns, got 2") as exc:
            load_series(path)
        assert exc.value.line == 2

    def test_too_many_columns(self, tmp_path):
        path = _write(tmp_path / "a.csv", "ts,value,label,junk\nt0,1.0,0,extra\n")
        with pytest.raises(IngestError, match="1 to 3 columns"):
            load_series(path)

    def test_header_with_no_rows(self, tmp_path):
        path = _write(tmp_path / "a.csv", "value,label\n")
        with pytest.raises(IngestError, match="no data rows"):
            load_series(path)


class TestSidecarFormat:
    def _series_with_sidecar(self, tmp_path, doc, n=30):
        path = _write(tmp_path / "run7.txt", "\n".join(str(v) for v in sine(n, seed=2)))
        _write(sidecar_path(path), json.dumps(doc))
        return path

    def test_sidecar_path_helper(self, tmp_path):
        assert sidecar_path(tmp_path / "run7.txt").name == "run7.labels.json"

    def test_regions_and_train_end(self, tmp_path):
        path = self._series_with_sidecar(
            tmp_path, {"regions": [[5, 9], [20, 21]], "train_end": 4}
        )
        ts, labels = load_series(path)
        assert ts.train_end == 4
        assert labels.regions == (Region(5, 9), Region(20, 21))

    def test_train_end_optional(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"regions": [[5, 9]]})
        ts, _ = load_series(path)
        assert ts.train_end is None

    def test_invalid_json(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"regions": []})
        sidecar_path(path).write_text("{not json")
        with pytest.raises(IngestError, match="invalid JSON"):
            load_series(path)

    def test_missing_regions_key(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"train_end": 4})
        with pytest.raises(IngestError, match='"regions"'):
            load_series(path)

    def test_malformed_region_items(self, tmp_path):
        for bad in [[5], [5, "a"], "5-9", [5, 9, 12]]:
            path = self._series_with_sidecar(tmp_path, {"regions": [bad]})
            with pytest.raises(IngestError, match="integer pair"):
                load_series(path)

    def test_reversed_region(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"regions": [[9, 5]]})
        with pytest.raises(IngestError):
            load_series(path)

    def test_region_out_of_bounds(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"regions": [[5, 400]]}, n=30)
        with pytest.raises(IngestError):
            load_series(path)

    def test_non_integer_train_end(self, tmp_path):
        path = self._series_with_sidecar(tmp_path, {"regions": [[5, 9]], "train_end": "4"})
        with pytest.raises(IngestError, match="train_end must be an integer"):
            load_series(path)


class TestDetectFormat:
    def test_sidecar_beats_ucr_name(self, tmp_path):
        path = _ucr_file(tmp_path)
        _write(sidecar_path(path), json.dumps({"regions": [[1, 2]]}))
        assert detect_format(path) is SeriesFormat.REGIONS_SIDECAR

    def test_ucr_name(self, tmp_path):
        assert detect_format(_ucr_file(tmp_path)) is SeriesFormat.UCR_SINGLE_COLUMN

    def test_csv_suffix(self, tmp_path):
        path = _write(tmp_path / "data.csv", "1.0\n")
        assert detect_format(path) is SeriesFormat.CSV_VALUE_LABEL

    def test_undetectable(self, tmp_path):
        path = _write(tmp_path / "data.txt", "1.0\n")
        with pytest.raises(IngestError, match="cannot infer"):
            detect_format(path)

    def test_explicit_format_overrides_detection(self, tmp_path):
        # a UCR-shaped name forced through the plain numeric-column reader
        path = _ucr_file(tmp_path, "UCR_Anomaly_x_2_4_5.csv", n=10)
        ts, labels = load_series(path, SeriesFormat.CSV_VALUE_LABEL)
        assert labels is None and len(ts) == 10

    def test_format_strings_accepted(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1.0,0\n2.0,1\n")
        _, labels = load_series(path, "csv")
        assert labels is not None
        with pytest.raises(ValueError):
            load_series(path, "parquet")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="cannot read"):
            load_series(tmp_path / "nope.csv", "csv")


class TestIngestErrorShape:
    def test_attributes_and_message(self, tmp_path):
        err = IngestError("/x/y.csv", "boom", line=7)
        assert (err.path, err.line, err.message) == ("/x/y.csv", 7, "boom")
        assert str(err) == "/x/y.csv:7: boom"
        assert str(IngestError("/x/y.csv", "boom")) == "/x/y.csv: boom"
