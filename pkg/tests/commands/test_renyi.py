"""
Tests for the renyi command.
"""

import pytest

from entropy_lab.commands.renyi import renyi


class TestRenyi:
    """Tests for the entropy power growth check."""

    @pytest.mark.asyncio
    async def test_barenblatt_alongside_data(self, quick_run, lab_settings):
        """Test that the Barenblatt run is the equality case next to the configured data."""
        result = await renyi(quick_run, lab_settings)

        assert set(result) == {"barenblatt", "perturbed", "passed", "output"}
        assert result["barenblatt"]["violation"] <= 1e-6
        assert result["barenblatt"]["slope"] == pytest.approx(result["perturbed"]["slope"], rel=1e-10)

    @pytest.mark.asyncio
    async def test_barenblatt_only(self, quick_run, lab_settings):
        """Test that Barenblatt data run once."""
        result = await renyi(quick_run.merged(init="barenblatt"), lab_settings)
        assert set(result) == {"barenblatt", "passed", "output"}
