"""
Run one trajectory and record its entropy series.

Writes the series CSV and the snapshot CSV; passes when the weighted mass
is conserved and the relative entropy never increases.
"""

import asyncio
from typing import Any

import numpy as np

from entropy_lab.app import lab
from entropy_lab.commands._common import output_path, run_trajectory
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.flow import MASS_DRIFT_TOLERANCE
from entropy_lab.serialization import write_series, write_snapshots

ENTROPY_SLACK = 1e-12


@lab.command()
async def evolve(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Integrate the rescaled flow and write the entropy series."""
    dp = run.derived()
    grid = run.grid(dp)
    series = await asyncio.to_thread(run_trajectory, run, dp, grid)

    path = write_series(output_path(run, settings, "evolve"), series, run)
    snapshots = write_snapshots(output_path(run, settings, "evolve", "-snapshots"), series, run)

    entropy, mass = series.column("F"), series.column("mass")
    mass_drift = float(np.max(np.abs(mass - mass[0])) / mass[0])
    monotone = bool(np.all(np.diff(entropy) <= ENTROPY_SLACK))
    return {
        "rows": len(series),
        "t_end": float(series.times[-1]),
        "F_initial": float(entropy[0]),
        "F_final": float(entropy[-1]),
        "mass_drift": mass_drift,
        "entropy_monotone": monotone,
        "passed": monotone and mass_drift <= MASS_DRIFT_TOLERANCE,
        "output": str(path),
        "snapshots": str(snapshots),
    }
