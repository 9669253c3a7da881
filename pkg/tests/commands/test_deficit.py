"""
Tests for the deficit command.
"""

import numpy as np
import pytest

from entropy_lab.app import EXIT_USAGE, exit_code_for
from entropy_lab.commands.deficit import deficit
from entropy_lab.config import RunConfig
from entropy_lab.profiles import RadialField
from entropy_lab.serialization import write_field


@pytest.fixture
def deficit_run():
    """d = 3, p = 1.5 on the unweighted grid."""
    return RunConfig(d=3, p=1.5, rmax=20.0, N=1024)


class TestDeficit:
    """Tests for GNS deficits."""

    @pytest.mark.asyncio
    async def test_optimizer(self, deficit_run, lab_settings):
        """Test that the optimizer has zero deficit."""
        result = await deficit(deficit_run, lab_settings)
        assert result["passed"] is True
        assert abs(result["relative_deficit"]) <= 1e-12
        assert result["K_gns"] == pytest.approx(result["K_closed"], rel=5e-3)
        assert "stability" not in result

    @pytest.mark.asyncio
    async def test_input_field(self, deficit_run, lab_settings, gns3_grid, tmp_path):
        """Test a Gaussian read from a field file, with the stability bound."""
        path = write_field(tmp_path / "gauss.csv", RadialField(gns3_grid, np.exp(-(gns3_grid.nodes**2))))

        result = await deficit(deficit_run.merged(input=path, mu=1.0), lab_settings)

        assert result["deficit"] > 0.0
        assert result["stability_rhs"] > 0.0
        assert result["passed"] is True
        assert result["stability"]["scaled_deficit"] == pytest.approx(5.0 * result["deficit"])

    @pytest.mark.asyncio
    async def test_missing_input(self, deficit_run, lab_settings, tmp_path):
        """Test that a missing input file is a usage error."""
        result = await deficit(deficit_run.merged(input=tmp_path / "missing.csv"), lab_settings)
        assert exit_code_for(result) == EXIT_USAGE
