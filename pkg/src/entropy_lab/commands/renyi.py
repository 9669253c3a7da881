"""
Growth of the Renyi entropy power along the reconstructed original-frame solution.

Runs the Barenblatt solution (equality case) next to the configured data.
"""

from typing import Any

from entropy_lab.app import gather_limited, lab
from entropy_lab.commands._common import output_path, run_trajectory
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.experiments import renyi_growth_check
from entropy_lab.serialization import write_table

RENYI_TOLERANCE = 1e-6


@lab.command()
async def renyi(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Check E^k(tau) >= E^k(0) + K tau for Barenblatt and the configured initial data."""
    dp = run.derived()
    grid = run.grid(dp)
    members = {"barenblatt": run.merged(init="barenblatt")}
    if run.init != "barenblatt":
        members[run.init] = run

    jobs = [lambda member=member: run_trajectory(member, dp, grid) for member in members.values()]
    series_list = await gather_limited(jobs, settings.threads)
    checks = {name: renyi_growth_check(series) for name, series in zip(members, series_list, strict=True)}

    path = write_table(
        output_path(run, settings, "renyi"),
        ("data", "violation", "margin", "slope", "exponent"),
        [(name, check.violation, check.margin, check.slope, check.exponent) for name, check in checks.items()],
        run,
    )
    return {
        name: {"violation": check.violation, "margin": check.margin, "slope": check.slope} for name, check in checks.items()
    } | {
        "passed": all(check.violation <= RENYI_TOLERANCE for check in checks.values()),
        "output": str(path),
    }
