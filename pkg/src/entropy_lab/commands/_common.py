"""Helpers shared by the trajectory commands."""

from __future__ import annotations

from pathlib import Path

from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.constants import DerivedParameters
from entropy_lab.errors import ConfigError
from entropy_lab.flow import FlowSeries, evolve, initial_data
from entropy_lab.profiles import RadialField, RadialGrid, stationary_reference


def output_path(run: RunConfig, settings: LabSettings, command: str, suffix: str = "") -> Path:
    """Main output path (``run.output``) or ``<out_dir>/<command>-<digest><suffix>.csv``.

    Raises:
        ConfigError: the directory of an explicit output path does not exist
    """
    if run.output is not None:
        if not run.output.parent.is_dir():
            raise ConfigError(f"output directory {run.output.parent} does not exist")
        return run.output if not suffix else run.output.with_name(f"{run.output.stem}{suffix}{run.output.suffix}")
    return settings.out_dir / f"{command}-{run.digest()}{suffix}.csv"


def build_initial(run: RunConfig, dp: DerivedParameters, grid: RadialGrid) -> RadialField:
    kind = run.initial()
    if kind is None:
        reference = stationary_reference(grid, dp)
        return reference if run.mass is None else reference.renormalized(run.mass)
    return initial_data(kind, grid, dp, run.mass)


def run_trajectory(run: RunConfig, dp: DerivedParameters, grid: RadialGrid) -> FlowSeries:
    return evolve(build_initial(run, dp, grid), run.flow_config(grid), dp)
