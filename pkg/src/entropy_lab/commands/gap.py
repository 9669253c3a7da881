"""
Numeric Hardy-Poincare gap against its closed form.

Solves the generalized eigenproblem for every angular mode up to l_max
and passes when the relative deviation from the closed form is within tol.
"""

import asyncio
from typing import Any

from entropy_lab.app import lab
from entropy_lab.commands._common import output_path
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.observability import get_logger
from entropy_lab.serialization import write_table
from entropy_lab.spectrum import hardy_poincare_gap

logger = get_logger(__name__)


@lab.command()
async def gap(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Compare the numeric spectral gap with the closed form (exit 1 if rel_dev > tol).

    Returns:
        Dict with:
        - Lambda_numeric, Lambda_closed, rel_dev: gap over the scanned modes and its deviation
        - gap_mode: angular mode attaining the gap
        - modes: eigenvalue per mode
        - passed: rel_dev <= tol
    """
    dp = run.derived()
    grid = run.grid(dp)
    result = await asyncio.to_thread(hardy_poincare_gap, dp, grid, run.l_max)

    path = output_path(run, settings, "gap")
    write_table(
        path,
        ("l", "Lambda", "closed_form", "rel_dev", "essential_bottom"),
        (
            (
                mode.l,
                mode.eigenvalue,
                result.closed_form,
                abs(mode.eigenvalue - result.closed_form) / result.closed_form,
                mode.essential_bottom,
            )
            for mode in result.modes
        ),
        run,
        grid.metadata(),
    )
    return {
        "Lambda_numeric": result.gap,
        "Lambda_closed": result.closed_form,
        "rel_dev": result.rel_dev,
        "gap_mode": result.gap_mode,
        "radial_gap": result.radial_gap,
        "modes": {str(mode.l): mode.eigenvalue for mode in result.modes},
        "tol": settings.tol,
        "passed": result.rel_dev <= settings.tol,
        "output": str(path),
    }
