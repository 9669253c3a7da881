"""
Tests for the gap command.
"""

from pathlib import Path

import pytest

from entropy_lab.app import EXIT_USAGE, EXIT_VERDICT, exit_code_for, lab
from entropy_lab.commands.gap import gap
from entropy_lab.config import RunConfig
from entropy_lab.serialization import read_table


class TestGap:
    """Tests for the numeric spectral gap command."""

    @pytest.mark.asyncio
    async def test_unweighted_reference(self, lab_settings):
        """Test d = 4, m = 0.8 against the closed form 10 in mode 1."""
        run = RunConfig(d=4, m=0.8, rmax=80.0, N=2048)

        result = await gap(run, lab_settings)

        assert result["passed"] is True
        assert result["Lambda_closed"] == pytest.approx(10.0)
        assert result["Lambda_numeric"] == pytest.approx(10.0, rel=5e-3)
        assert result["gap_mode"] == 1
        assert set(result["modes"]) == {"0", "1", "2", "3", "4"}
        columns, rows, _, _ = read_table(Path(result["output"]))
        assert columns[0] == "l"
        assert len(rows) == 5

    @pytest.mark.asyncio
    async def test_tolerance_verdict(self, lab_settings):
        """Test that a coarse grid fails a tight tolerance."""
        run = RunConfig(d=4, m=0.8, rmax=10.0, N=64, l_max=2)
        result = await gap(run, lab_settings.model_copy(update={"tol": 1e-9}))
        assert result["passed"] is False
        assert exit_code_for(result) == EXIT_VERDICT

    @pytest.mark.asyncio
    async def test_outside_closed_form(self, tmp_path):
        """Test that delta < n is a usage error."""
        result = await lab.run("gap", RunConfig(d=4, m=0.7, rmax=10.0, N=64, out_dir=tmp_path))
        assert exit_code_for(result) == EXIT_USAGE
