"""
Tests for CSV artifacts and summaries.
"""

import math

import numpy as np
import pytest

from entropy_lab.config import RunConfig
from entropy_lab.errors import ConfigError
from entropy_lab.experiments import check_entropy_production, ghp_sandwich, renyi_growth_check
from entropy_lab.serialization import (
    SUMMARY_FILE,
    append_summary,
    format_summary,
    read_config_header,
    read_field,
    read_series,
    read_table,
    write_field,
    write_series,
    write_snapshots,
    write_table,
)


class TestTables:
    """Tests for the generic table format."""

    def test_header_and_rows(self, tmp_path, quick_run):
        """Test config echo, metadata and number formatting."""
        path = write_table(tmp_path / "t.csv", ("a", "b"), [(1, 0.1), (2, None)], quick_run, {"d": 4, "flag": True})
        columns, rows, config_lines, meta = read_table(path)
        assert columns == ["a", "b"]
        assert rows == [["1", "0.1"], ["2", ""]]
        assert "N = 128" in config_lines
        assert meta == {"d": "4", "flag": "true"}

    def test_config_header_reparses(self, tmp_path, quick_run):
        """Test that the echoed configuration reproduces the run."""
        path = write_table(tmp_path / "t.csv", ("x",), [(1.0,)], quick_run)
        assert read_config_header(path) == quick_run

    def test_creates_parent_directories(self, tmp_path):
        """Test writing into a directory that does not exist yet."""
        path = write_table(tmp_path / "nested" / "deeper" / "t.csv", ("x",), [])
        assert path.is_file()

    def test_missing_column_row(self, tmp_path):
        """Test a file with only comments."""
        path = tmp_path / "empty.csv"
        path.write_text("# d = 4\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="no column row"):
            read_table(path)


class TestFields:
    """Tests for field files."""

    def test_field_file(self, tmp_path, reference):
        """Test that a field file restores values and grid."""
        path = write_field(tmp_path / "B.csv", reference)
        restored = read_field(path)
        assert restored.grid.same_as(reference.grid)
        assert np.array_equal(restored.values, reference.values)

    def test_not_a_field_file(self, tmp_path):
        """Test that other tables are rejected."""
        path = write_table(tmp_path / "t.csv", ("beta", "gamma", "label"), [])
        with pytest.raises(ConfigError, match="not a field file"):
            read_field(path)


class TestSeries:
    """Tests for series files."""

    def test_experiments_reproduce_from_files(self, tmp_path, perturbed_series, quick_run):
        """Test that experiments on a re-read series give the same outputs."""
        series_path = write_series(tmp_path / "s.csv", perturbed_series, quick_run)
        snapshots_path = write_snapshots(tmp_path / "s-snapshots.csv", perturbed_series, quick_run)
        restored = read_series(series_path, snapshots_path)

        assert len(restored) == len(perturbed_series)
        assert restored.params == perturbed_series.params
        assert restored.config["dt"] == "0.01"
        assert check_entropy_production(restored) == check_entropy_production(perturbed_series)
        assert ghp_sandwich(restored) == ghp_sandwich(perturbed_series)
        assert renyi_growth_check(restored) == renyi_growth_check(perturbed_series)

    def test_undefined_quotient(self, tmp_path, stationary_series):
        """Test that NaN quotients survive the file format."""
        restored = read_series(write_series(tmp_path / "s.csv", stationary_series))
        assert math.isnan(restored.rows[0].Q)

    def test_snapshots_required(self, tmp_path, make_series, gns_dp, small_grid):
        """Test that a series without snapshots cannot write them."""
        series = make_series(np.linspace(0.0, 1.0, 11), np.ones(11), gns_dp, small_grid)
        with pytest.raises(ConfigError, match="snapshots"):
            write_snapshots(tmp_path / "s.csv", series)

    def test_not_a_series_file(self, tmp_path):
        """Test that other tables are rejected."""
        path = write_table(tmp_path / "t.csv", ("r", "value"), [])
        with pytest.raises(ConfigError, match="not a series file"):
            read_series(path)


class TestSummary:
    """Tests for key = value summaries."""

    def test_format_summary(self):
        """Test nested keys, lists, booleans and missing values."""
        result = {"gap": 10.0, "modes": {"l0": 12.0}, "epsilons": [0.2, 0.1], "passed": True, "t_star": None}
        assert format_summary(result) == [
            "gap = 10.0",
            "modes.l0 = 12.0",
            "epsilons = 0.2,0.1",
            "passed = true",
            "t_star = ",
        ]

    def test_append_summary(self, tmp_path):
        """Test that blocks accumulate under their keys."""
        append_summary(tmp_path, "gap", "abc", {"passed": True})
        path = append_summary(tmp_path, "rates", "def", {"slope": 0.35})
        assert path == tmp_path / SUMMARY_FILE
        text = path.read_text(encoding="utf-8")
        assert "[gap abc]\npassed = true\n" in text
        assert "[rates def]\nslope = 0.35\n" in text

    def test_creates_out_dir(self, tmp_path):
        """Test that a missing output directory is created."""
        append_summary(tmp_path / "new", "gap", RunConfig().digest(), {"passed": False})
        assert (tmp_path / "new" / SUMMARY_FILE).is_file()
