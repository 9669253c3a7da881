"""
Threshold times of the uniform relative error and the global Harnack sandwich.
"""

import asyncio
from typing import Any

import numpy as np

from entropy_lab.app import lab
from entropy_lab.commands._common import output_path, run_trajectory
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.errors import ExperimentRefusedError
from entropy_lab.experiments import ghp_onset_scan, ghp_sandwich, threshold_time
from entropy_lab.serialization import write_table

ONSET_SCAN_POINTS = 5


@lab.command()
async def ghp(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Empirical t_star(epsilon) with its power-law exponent, and C_under B <= v <= C_over B after --onset.

    Passes when the threshold times are monotone and, for mass-matched data,
    the sandwich straddles one.
    """
    dp = run.derived()
    grid = run.grid(dp)
    series = await asyncio.to_thread(run_trajectory, run, dp, grid)
    if series.snapshots is None:
        raise ExperimentRefusedError("ghp needs a trajectory recorded with snapshots")

    report = threshold_time(series, run.epsilons)
    sandwich = ghp_sandwich(series, run.onset)
    onsets = np.linspace(run.onset, float(series.times[-1]), ONSET_SCAN_POINTS)
    scan = ghp_onset_scan(series, onsets.tolist())

    path = write_table(
        output_path(run, settings, "ghp"),
        ("epsilon", "t_star"),
        [(eps, "censored" if t is None else t) for eps, t in zip(report.epsilons, report.t_star_empirical, strict=True)],
        run,
        {"a_fit": report.a_fit, "monotone": report.monotone},
    )
    onset_path = write_table(
        output_path(run, settings, "ghp", "-onsets"),
        ("onset", "C_under", "C_over"),
        [(item.onset, item.C_under, item.C_over) for item in scan],
        run,
    )

    mass_matched = run.mass is None
    passed = report.monotone and (sandwich.straddles_one or not mass_matched)
    return {
        "t_star": {str(eps): t for eps, t in zip(report.epsilons, report.t_star_empirical, strict=True)},
        "a_fit": report.a_fit,
        "monotone": report.monotone,
        "sandwich": {
            "onset": sandwich.onset,
            "C_under": sandwich.C_under,
            "C_over": sandwich.C_over,
            "offending_radius": sandwich.offending_radius,
        },
        "passed": passed,
        "output": str(path),
        "onsets": str(onset_path),
    }
