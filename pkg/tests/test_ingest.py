import io

import numpy as np
import pytest

from sigcast.errors import DataError
from sigcast.ingest import ingest_csv, panel_to_csv


def _load(text, **kw):
    return ingest_csv(io.StringIO(text), **kw)


class TestIngestCsv:
    def test_well_formed(self):
        panel = _load(
            "date,y,f1\n2021-01-04,1.0,0.5\n2021-01-11,2.0,0.6\n2021-01-18,3.0,0.7\n"
        )
        assert panel.length == 3
        assert panel.factor_names == ("f1",)
        np.testing.assert_array_equal(panel.target, [1.0, 2.0, 3.0])

    def test_target_only_panel(self):
        panel = _load("date,y\n2021-01-04,1.0\n2021-01-11,2.0\n")
        assert panel.n_factors == 0

    def test_rows_sorted_by_date(self):
        panel = _load("date,y\n2021-01-11,2.0\n2021-01-04,1.0\n")
        assert panel.dates == ("2021-01-04", "2021-01-11")
        np.testing.assert_array_equal(panel.target, [1.0, 2.0])

    def test_duplicate_date_named(self):
        with pytest.raises(DataError, match="2021-01-04"):
            _load("date,y\n2021-01-04,1.0\n2021-01-04,2.0\n")

    def test_malformed_numeric_cell_names_row_and_column(self):
        with pytest.raises(DataError, match=r"line 3.*'y'"):
            _load("date,y\n2021-01-04,1.0\n2021-01-11,oops\n")

    def test_missing_value_rejected(self):
        with pytest.raises(DataError, match="missing value"):
            _load("date,y,f1\n2021-01-04,1.0,\n")

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="non-finite"):
            _load("date,y\n2021-01-04,nan\n")

    def test_malformed_date(self):
        with pytest.raises(DataError, match="malformed date"):
            _load("date,y\n04/01/2021,1.0\n")

    def test_missing_columns(self):
        with pytest.raises(DataError, match="date column"):
            _load("day,y\n2021-01-04,1.0\n", date_column="date")
        with pytest.raises(DataError, match="target column"):
            _load("date,rate\n2021-01-04,1.0\n", target_column="y")

    def test_weekly_gap_detected(self):
        text = "date,y\n2021-01-04,1.0\n2021-01-11,2.0\n2021-01-25,3.0\n"
        with pytest.raises(DataError, match="gaps"):
            _load(text, frequency="weekly")
        _load(text)  # no declared frequency, no gap check

    def test_monthly_frequency(self):
        good = "date,y\n2021-01-01,1.0\n2021-02-01,2.0\n2021-03-01,3.0\n"
        _load(good, frequency="monthly")
        bad = "date,y\n2021-01-01,1.0\n2021-03-01,3.0\n"
        with pytest.raises(DataError, match="gaps"):
            _load(bad, frequency="monthly")

    def test_daily_frequency(self):
        good = "date,y\n2021-01-01,1.0\n2021-01-02,2.0\n"
        _load(good, frequency="daily")

    def test_allowlist_and_denylist(self):
        text = "date,y,a,b,c\n2021-01-04,1,1,2,3\n2021-01-11,2,4,5,6\n"
        panel = _load(text, factor_columns=["c", "a"])
        assert panel.factor_names == ("c", "a")
        panel = _load(text, exclude_columns=["b"])
        assert panel.factor_names == ("a", "c")

    def test_allowlist_missing_column(self):
        with pytest.raises(DataError, match="not in header"):
            _load("date,y,a\n2021-01-04,1,2\n", factor_columns=["zzz"])

    def test_empty_file(self):
        with pytest.raises(DataError, match="header"):
            _load("")
        with pytest.raises(DataError, match="no data rows"):
            _load("date,y\n")

    def test_ragged_row(self):
        with pytest.raises(DataError, match="expected 2 cells"):
            _load("date,y\n2021-01-04,1.0,9.9\n")

    def test_blank_lines_skipped(self):
        panel = _load("date,y\n2021-01-04,1.0\n\n2021-01-11,2.0\n")
        assert panel.length == 2

    def test_unknown_frequency(self):
        with pytest.raises(DataError, match="frequency"):
            _load("date,y\n2021-01-04,1.0\n", frequency="hourly")


class TestPanelToCsv:
    def test_round_trip(self):
        text = "date,y,f1\n2021-01-04,1.5,0.25\n2021-01-11,2.5,0.75\n"
        panel = _load(text)
        rendered = panel_to_csv(panel)
        again = _load(rendered)
        np.testing.assert_array_equal(again.target, panel.target)
        np.testing.assert_array_equal(again.factors, panel.factors)
        assert again.dates == panel.dates

    def test_lf_endings_and_plain_decimals(self):
        panel = _load("date,y\n2021-01-04,0.1\n2021-01-11,1234567.25\n")
        rendered = panel_to_csv(panel)
        assert "\r" not in rendered
        assert "1234567.25" in rendered
