"""
Hardy-Poincare spectral gap of the flow linearized around the Barenblatt profile.

For each angular mode l the quadratic forms

    a(f, f) = integral (alpha^2 f'^2 + l(l+d-2) f^2 / r^2) B dmu,   b(f, f) = integral f^2 B^(2-m) dmu

are discretized on the cell centers (edge differences for f', the same
stencil as the flow fluxes). The mass form is diagonal, so the
generalized problem reduces to the symmetric tridiagonal matrix
b^(-1/2) a b^(-1/2), solved by bisection with inverse iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import eigh_tridiagonal

from entropy_lab.constants import DerivedParameters, essential_spectrum_bottom, spectral_gap_closed_form, zeta_ckn
from entropy_lab.errors import ParameterError
from entropy_lab.observability import get_logger, get_tracer
from entropy_lab.profiles import RadialField, RadialGrid

logger = get_logger(__name__)
tracer = get_tracer(__name__)

DEFAULT_L_MAX = 4


@dataclass(frozen=True, eq=False)
class ModeForms:
    """Stiffness a (tridiagonal) and mass b (diagonal) of one angular mode, with log b for scaling."""

    l: int
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    mass: np.ndarray
    log_mass: np.ndarray
    log_off_scaled: np.ndarray

    def stiffness(self, f: np.ndarray) -> float:
        return float(np.dot(f, self.diagonal * f) + 2.0 * np.dot(f[:-1], self.off_diagonal * f[1:]))

    def mass_form(self, f: np.ndarray, g: np.ndarray | None = None) -> float:
        g = f if g is None else g
        return float(np.dot(f, self.mass * g))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (a, b) matrices; for small grids and tests."""
        a = np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)
        return a, np.diag(self.mass)


class ModeResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    l: int
    eigenvalue: float
    eigenfunction: RadialField
    essential_bottom: float


class SpectralResult(BaseModel):
    """Per-mode eigenvalues, the gap over the scanned modes and its deviation from the closed form."""

    model_config = ConfigDict(frozen=True)

    modes: list[ModeResult]
    gap: float
    gap_mode: int
    closed_form: float
    rel_dev: float

    @property
    def radial_gap(self) -> float:
        return next(mode.eigenvalue for mode in self.modes if mode.l == 0)


def _log_barenblatt(nodes: np.ndarray, dp: DerivedParameters) -> np.ndarray:
    return -dp.delta * np.log1p(nodes**2)


def assemble_mode(l: int, grid: RadialGrid, dp: DerivedParameters) -> ModeForms:  # noqa: E741
    """Discrete forms of mode l: natural boundary at R_max for l = 0, Dirichlet for l >= 1."""
    if l < 0:
        raise ParameterError(f"angular mode must be >= 0, got {l}")
    nodes = grid.nodes
    log_b = _log_barenblatt(nodes, dp)
    log_b_edge = np.logaddexp(log_b[:-1], log_b[1:]) - math.log(2.0)
    log_weight = np.log(dp.alpha**2 * grid.edge_weights) + log_b_edge
    weight = np.exp(log_weight)

    diagonal = np.zeros(grid.size)
    diagonal[:-1] += weight
    diagonal[1:] += weight
    if l > 0:
        diagonal += l * (l + dp.d - 2.0) * np.exp(log_b) * grid.volumes / nodes**2
        # f(R_max) = 0 through the half cell beyond the last center
        r_max = grid.r_max
        log_b_max = -dp.delta * math.log1p(r_max**2)
        diagonal[-1] += dp.alpha**2 * grid.angular_factor * r_max ** (grid.n_eff - 1.0) * math.exp(log_b_max) / (r_max - nodes[-1])

    log_mass = np.log(grid.volumes) + (2.0 - dp.m) * log_b
    # -weight / sqrt(b_i b_(i+1)) in the log domain
    log_off_scaled = log_weight - 0.5 * (log_mass[:-1] + log_mass[1:])
    return ModeForms(
        l=l,
        diagonal=diagonal,
        off_diagonal=-weight,
        mass=np.exp(log_mass),
        log_mass=log_mass,
        log_off_scaled=log_off_scaled,
    )


def smallest_eigenvalue(l: int, grid: RadialGrid, dp: DerivedParameters) -> tuple[float, RadialField]:  # noqa: E741
    """Smallest admissible generalized eigenvalue of mode l and its eigenfunction.

    For l = 0 constants are an exact null vector; the second eigenvalue is the
    minimum on the b-orthogonal complement of constants and the eigenfunction
    is projected onto that complement.
    """
    forms = assemble_mode(l, grid, dp)
    scaled_diagonal = forms.diagonal / forms.mass
    scaled_off = -np.exp(forms.log_off_scaled)
    index = 1 if l == 0 else 0

    values, vectors = eigh_tridiagonal(
        scaled_diagonal,
        scaled_off,
        select="i",
        select_range=(index, index),
        lapack_driver="stebz",
    )
    f = vectors[:, 0] * np.exp(-0.5 * forms.log_mass)
    if l == 0:
        ones = np.ones_like(f)
        f = f - forms.mass_form(f, ones) / forms.mass_form(ones) * ones
    f = f / math.sqrt(forms.mass_form(f))
    if f[0] < 0.0:
        f = -f
    return float(values[0]), RadialField(grid, f)


def hardy_poincare_gap(dp: DerivedParameters, grid: RadialGrid, l_max: int = DEFAULT_L_MAX) -> SpectralResult:
    """Gap min over l in 0..l_max compared with the closed form.

    Raises:
        ParameterError: l_max < 2, or parameters outside the closed form's hypothesis
    """
    if l_max < 2:
        raise ParameterError(f"l_max must be >= 2, got {l_max}")
    closed_form = spectral_gap_closed_form(dp)

    with tracer.start_as_current_span("spectrum.hardy_poincare_gap") as span:
        span.set_attribute("spectrum.l_max", l_max)
        span.set_attribute("spectrum.cells", grid.size)
        modes = []
        for l in range(l_max + 1):  # noqa: E741
            eigenvalue, eigenfunction = smallest_eigenvalue(l, grid, dp)
            modes.append(
                ModeResult(
                    l=l,
                    eigenvalue=eigenvalue,
                    eigenfunction=eigenfunction,
                    essential_bottom=essential_spectrum_bottom(dp, l),
                )
            )
        best = min(modes, key=lambda mode: mode.eigenvalue)
        rel_dev = abs(best.eigenvalue - closed_form) / closed_form
        span.set_attribute("spectrum.rel_dev", rel_dev)

    if best.l == l_max:
        logger.warning("gap_attained_at_highest_mode", l_max=l_max, gap=best.eigenvalue)
    logger.info("spectral_gap_computed", gap=best.eigenvalue, mode=best.l, closed_form=closed_form, rel_dev=rel_dev)
    return SpectralResult(modes=modes, gap=best.eigenvalue, gap_mode=best.l, closed_form=closed_form, rel_dev=rel_dev)


def rate_prediction(dp: DerivedParameters, Lambda: float) -> tuple[float, float, float]:
    """(baseline 4 alpha^2, improved 4 alpha^2 + 2 zeta, linearized 2(1-m) Lambda).

    Raises:
        ParameterError: Lambda <= 0
    """
    if Lambda <= 0.0:
        raise ParameterError(f"Lambda must be positive, got {Lambda}")
    baseline = 4.0 * dp.alpha**2
    zeta = zeta_ckn(dp, Lambda)
    return baseline, baseline + 2.0 * zeta, baseline + 4.0 * zeta
