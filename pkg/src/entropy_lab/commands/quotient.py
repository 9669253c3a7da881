"""
Sweep of seeded radial perturbations checking dQ/dt <= Q(Q - 4).

Only unweighted runs are accepted.
"""

from typing import Any

import numpy as np

from entropy_lab.app import gather_limited, lab
from entropy_lab.commands._common import output_path, run_trajectory
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.errors import ExperimentRefusedError
from entropy_lab.experiments import check_quotient_ode
from entropy_lab.observability import get_logger
from entropy_lab.serialization import append_summary, write_table

logger = get_logger(__name__)

QUOTIENT_TOLERANCE = 0.02
MAX_MODE = 4


def sweep_members(run: RunConfig, seed: int) -> list[RunConfig]:
    """``run.runs`` perturbed-Barenblatt configurations drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    return [
        run.merged(init="perturbed", mode=int(rng.integers(1, MAX_MODE + 1)), amplitude=float(rng.uniform(0.02, 0.1)), runs=1)
        for _ in range(run.runs)
    ]


@lab.command()
async def quotient(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Check the quotient inequality on --runs seeded perturbations (unweighted only; exit 1 above 0.02)."""
    dp = run.derived()
    if dp.beta != 0.0 or dp.gamma != 0.0:
        raise ExperimentRefusedError("the quotient inequality is only established without weights (beta = gamma = 0)")
    grid = run.grid(dp)
    members = sweep_members(run, settings.seed)

    series_list = await gather_limited([lambda member=member: run_trajectory(member, dp, grid) for member in members], settings.threads)

    rows = []
    for member, series in zip(members, series_list, strict=True):
        violation = check_quotient_ode(series)
        rows.append((member.digest(), member.mode, member.amplitude, violation))
        summary = {"mode": member.mode, "amplitude": member.amplitude, "violation": violation}
        append_summary(settings.out_dir, "quotient", member.digest(), summary)

    worst = max(row[3] for row in rows)
    columns = ("digest", "mode", "amplitude", "violation")
    path = write_table(output_path(run, settings, "quotient"), columns, rows, run, {"seed": settings.seed})
    logger.info("quotient_sweep_completed", runs=len(rows), worst=worst)
    return {
        "runs": len(rows),
        "violation": worst,
        "tolerance": QUOTIENT_TOLERANCE,
        "passed": worst <= QUOTIENT_TOLERANCE,
        "output": str(path),
    }
