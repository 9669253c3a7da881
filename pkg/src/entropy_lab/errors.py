"""
Exception hierarchy for the lab.

Library code raises these; the command layer turns them into error results
with an exit code instead of letting them reach the entry point.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class of all lab errors."""


class ParameterError(LabError, ValueError):
    """Parameters outside the admissible set or outside an operation's hypothesis."""


class GridError(ParameterError):
    """Invalid grid construction or mismatched grids."""


class ConfigError(LabError, ValueError):
    """Malformed run configuration (unknown keys, bad ranges, unparsable values)."""


class NegativeDensityError(LabError, ValueError):
    """A density field has negative entries where nonnegativity is required."""


class ExplicitStepError(NegativeDensityError):
    """An explicit step produced negative values."""

    def __init__(self, t: float, dt: float) -> None:
        super().__init__(f"explicit step at t={t:g} produced negative values; reduce dt (now {dt:g}) or use the implicit scheme")
        self.t = t
        self.dt = dt


class NewtonDivergenceError(LabError, RuntimeError):
    """Damped Newton failed to reach the tolerance in a backward-Euler step."""

    def __init__(self, residual: float, iterations: int, t: float) -> None:
        super().__init__(f"Newton did not converge at t={t:g} after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations
        self.t = t


class LineSearchError(LabError, RuntimeError):
    """A one-dimensional minimization did not converge."""


class ExperimentRefusedError(LabError):
    """An experiment was asked to run outside its stated preconditions."""
