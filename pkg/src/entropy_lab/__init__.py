"""
CKN entropy lab.

Numerical laboratory for the entropy method behind the Gagliardo-Nirenberg-Sobolev
and Caffarelli-Kohn-Nirenberg inequalities: admissible parameter regions,
Barenblatt profiles, the weighted fast diffusion flow in self-similar variables,
the Hardy-Poincare spectral gap and the experiments that tie them together.
"""

from entropy_lab.constants import CknParameters, DerivedParameters, RegionLabel, classify, derive
from entropy_lab.errors import (
    ConfigError,
    ExperimentRefusedError,
    LabError,
    NegativeDensityError,
    NewtonDivergenceError,
    ParameterError,
)
from entropy_lab.flow import FlowConfig, FlowSeries, evolve
from entropy_lab.profiles import RadialField, RadialGrid, make_grid, stationary_reference
from entropy_lab.spectrum import hardy_poincare_gap

__version__ = "0.1.0"

__all__ = [
    "CknParameters",
    "ConfigError",
    "DerivedParameters",
    "ExperimentRefusedError",
    "FlowConfig",
    "FlowSeries",
    "LabError",
    "NegativeDensityError",
    "NewtonDivergenceError",
    "ParameterError",
    "RadialField",
    "RadialGrid",
    "RegionLabel",
    "__version__",
    "classify",
    "derive",
    "evolve",
    "hardy_poincare_gap",
    "make_grid",
    "stationary_reference",
]
