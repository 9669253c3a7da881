"""
Shared test fixtures for ckn-entropy-lab tests.
"""

from pathlib import Path

import numpy as np
import pytest

from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.constants import CknParameters, DerivedParameters, derive
from entropy_lab.flow import FlowConfig, FlowSeries, PerturbedBarenblatt, evolve, initial_data
from entropy_lab.functionals import EntropyReport
from entropy_lab.profiles import RadialField, RadialGrid, build_grid, make_grid, stationary_reference


@pytest.fixture
def gns_dp() -> DerivedParameters:
    """Unweighted d = 4, m = 0.8 (gap 10 in mode 1, radial gap 12).

    Returns:
        Derived parameters
    """
    return derive(CknParameters(d=4, m=0.8))


@pytest.fixture
def critical_dp() -> DerivedParameters:
    """Unweighted d = 4, m = 3/4 (delta = n, gap 8)."""
    return derive(CknParameters(d=4, m=0.75))


@pytest.fixture
def weighted_dp() -> DerivedParameters:
    """Weighted reference d = 4, beta = -0.5, gamma = 1, m = 0.95 (alpha = 1/4, n = 12, gap 3.5)."""
    return derive(CknParameters(d=4, beta=-0.5, gamma=1.0, m=0.95))


@pytest.fixture
def small_grid(gns_dp: DerivedParameters) -> RadialGrid:
    """Coarse grid for fast trajectories.

    Returns:
        128 cells on (0, 10]
    """
    return make_grid(10.0, 128, gns_dp)


@pytest.fixture
def fine_grid(gns_dp: DerivedParameters) -> RadialGrid:
    """1024 cells on (0, 20] for quadrature comparisons."""
    return make_grid(20.0, 1024, gns_dp)


@pytest.fixture
def gns3_grid() -> RadialGrid:
    """Unweighted d = 3 grid for GNS deficit checks (p = 1.5 decays fast enough)."""
    return build_grid(20.0, 1024, n=3.0, d=3)


@pytest.fixture
def reference(small_grid: RadialGrid, gns_dp: DerivedParameters) -> RadialField:
    """Projected stationary profile on the coarse grid."""
    return stationary_reference(small_grid, gns_dp)


@pytest.fixture
def perturbed_series(small_grid: RadialGrid, gns_dp: DerivedParameters) -> FlowSeries:
    """Short implicit run from a mass-matched dilation perturbation.

    Returns:
        50 steps of dt = 0.01 with snapshots
    """
    v0 = initial_data(PerturbedBarenblatt(mode=0, amplitude=0.1), small_grid, gns_dp)
    return evolve(v0, FlowConfig(grid=small_grid, dt=0.01, t_end=0.5), gns_dp)


@pytest.fixture
def stationary_series(small_grid: RadialGrid, gns_dp: DerivedParameters, reference: RadialField) -> FlowSeries:
    """Run started exactly at the projected stationary profile."""
    return evolve(reference, FlowConfig(grid=small_grid, dt=0.01, t_end=1.0), gns_dp)


def synthetic_series(
    times: np.ndarray,
    entropy: np.ndarray,
    dp: DerivedParameters,
    grid: RadialGrid,
    fisher: np.ndarray | None = None,
    quotient: np.ndarray | None = None,
    relerr: np.ndarray | None = None,
) -> FlowSeries:
    """FlowSeries with prescribed columns and no snapshots."""
    fisher = 4.0 * entropy if fisher is None else fisher
    quotient = fisher / entropy if quotient is None else quotient
    relerr = np.zeros_like(times) if relerr is None else relerr
    rows = [
        EntropyReport(t=t, F=f, I=i, Q=q, mass=1.0, second_moment=1.0, tail_A=1.0, relerr_sup=e)
        for t, f, i, q, e in zip(times, entropy, fisher, quotient, relerr, strict=True)
    ]
    return FlowSeries(rows=rows, grid=grid, params=dp)


@pytest.fixture
def make_series():
    """Factory for synthetic series."""
    return synthetic_series


@pytest.fixture
def lab_settings(tmp_path: Path) -> LabSettings:
    """Lab settings writing into a temporary directory."""
    return LabSettings(out_dir=tmp_path, threads=2, seed=7, tol=5e-3)


@pytest.fixture
def quick_run(tmp_path: Path) -> RunConfig:
    """Small unweighted run configuration.

    Returns:
        d = 4, m = 0.8 on 128 cells of (0, 10], 50 steps of 0.01
    """
    return RunConfig(d=4, m=0.8, rmax=10.0, N=128, dt=0.01, t_end=0.5, amplitude=0.1, out_dir=tmp_path)
