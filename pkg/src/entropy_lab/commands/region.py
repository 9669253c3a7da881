"""
Classify a (beta, gamma) grid into admissible symmetry regions.

Writes one CSV row (beta, gamma, label) per grid point.
"""

import asyncio
from collections import Counter
from typing import Any

from entropy_lab.app import error_result, lab
from entropy_lab.commands._common import output_path
from entropy_lab.config import LabSettings, Range, RunConfig
from entropy_lab.constants import RegionLabel, region_scan
from entropy_lab.observability import get_logger
from entropy_lab.serialization import write_table

logger = get_logger(__name__)


@lab.command()
async def region(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Classify a beta x gamma grid (ranges lo:hi:steps) for fixed d and p.

    The output path is required: without -o the command is a usage error.

    Returns:
        Dict with:
        - output: CSV path
        - rows: number of classified points
        - counts: points per label
    """
    if not isinstance(run.beta, Range) or not isinstance(run.gamma, Range):
        return error_result("region needs --beta and --gamma as ranges lo:hi:steps")
    if run.p is None:
        return error_result("region needs --p (a value, or 'critical' for p = p_star at every point)")
    if run.output is None:
        return error_result("region needs an output path (-o FILE)")

    p = None if run.p == "critical" else float(run.p)
    path = output_path(run, settings, "region")
    beta, gamma = run.beta, run.gamma
    rows = await asyncio.to_thread(region_scan, run.d, p, (beta.lo, beta.hi), (gamma.lo, gamma.hi), (beta.steps, gamma.steps))

    write_table(path, ("beta", "gamma", "label"), ((b, g, str(label)) for b, g, label in rows), run, {"d": run.d, "p": run.p})
    counts = Counter(label for _, _, label in rows)
    logger.info("region_scanned", rows=len(rows), output=str(path))
    return {
        "output": str(path),
        "rows": len(rows),
        "counts": {str(label): counts.get(label, 0) for label in RegionLabel},
    }
