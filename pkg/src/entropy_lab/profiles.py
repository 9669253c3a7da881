"""
Radial grids, weighted quadrature and the Barenblatt / Aubin-Talenti profiles.

All flow-facing quantities live in the artificial-dimension frame: radius
s = |x|^alpha, measure dmu = (|S^(d-1)|/alpha) s^(n-1) ds. With this
normalization an integral over the artificial frame equals the original
weighted integral of the same density against |x|^(-gamma) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import beta as beta_function
from scipy.special import betainc

from entropy_lab.constants import DerivedParameters, sphere_area
from entropy_lab.errors import GridError, NegativeDensityError, ParameterError

MIN_CELLS = 16
DEFAULT_GEOMETRIC_RATIO = 1.002


class Spacing(StrEnum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Cell-centered radial grid on (0, R_max] for the measure angular_factor * r^(n-1) dr."""

    edges: np.ndarray
    n_eff: float
    angular_factor: float
    d: int
    alpha: float = 1.0
    spacing: Spacing = Spacing.UNIFORM
    ratio: float | None = None

    def __post_init__(self) -> None:
        if self.n_eff <= 0.0:
            raise GridError(f"effective dimension must be positive, got {self.n_eff}")
        if self.edges[0] != 0.0 or np.any(np.diff(self.edges) <= 0.0):
            raise GridError("grid edges must start at 0 and increase strictly")
        self.edges.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.edges) - 1

    @property
    def r_max(self) -> float:
        return float(self.edges[-1])

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = 0.5 * (self.edges[:-1] + self.edges[1:])
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def volumes(self) -> np.ndarray:
        """Exact measure of every cell."""
        lo, hi = self.edges[:-1], self.edges[1:]
        with np.errstate(divide="ignore"):
            # hi^n - lo^n without cancellation; lo = 0 gives log -inf and expm1 -1
            shrink = -np.expm1(self.n_eff * np.log(lo / hi))
        volumes = self.angular_factor * hi**self.n_eff * shrink / self.n_eff
        volumes.setflags(write=False)
        return volumes

    @cached_property
    def interior_edges(self) -> np.ndarray:
        """Edges separating cell i from cell i+1."""
        return self.edges[1:-1]

    @cached_property
    def node_gaps(self) -> np.ndarray:
        """Distances r_(i+1) - r_i between neighbouring centers."""
        return np.diff(self.nodes)

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """angular_factor * r_e^(n-1) / (r_(i+1) - r_i) at every interior edge."""
        return self.angular_factor * self.interior_edges ** (self.n_eff - 1.0) / self.node_gaps

    @cached_property
    def edge_measures(self) -> np.ndarray:
        """angular_factor * r_e^(n-1) * (r_(i+1) - r_i): the measure carried by an edge difference."""
        return self.angular_factor * self.interior_edges ** (self.n_eff - 1.0) * self.node_gaps

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint quadrature of a cell-centered array against the grid measure."""
        return float(np.dot(self.volumes, values))

    def original_radius(self) -> np.ndarray:
        """Original radius |x| = s^(1/alpha) of every cell center."""
        return self.nodes ** (1.0 / self.alpha)

    def metadata(self) -> dict[str, Any]:
        meta: dict[str, Any] = {
            "R_max": self.r_max,
            "N": self.size,
            "spacing": str(self.spacing),
            "n_eff": self.n_eff,
            "d": self.d,
            "alpha": self.alpha,
        }
        if self.ratio is not None:
            meta["ratio"] = self.ratio
        return meta

    def same_as(self, other: RadialGrid) -> bool:
        return self is other or (
            self.n_eff == other.n_eff
            and self.angular_factor == other.angular_factor
            and self.edges.shape == other.edges.shape
            and bool(np.array_equal(self.edges, other.edges))
        )


def build_grid(
    R_max: float,
    N: int,
    n: float,
    d: int,
    alpha: float = 1.0,
    spacing: Spacing | str = Spacing.UNIFORM,
    ratio: float | None = None,
) -> RadialGrid:
    """Build a grid from explicit measure parameters.

    Raises:
        GridError: R_max <= 0, N < 16 or a geometric ratio <= 1
    """
    spacing = Spacing(spacing)
    if R_max <= 0.0:
        raise GridError(f"R_max must be positive, got {R_max}")
    if N < MIN_CELLS:
        raise GridError(f"N must be at least {MIN_CELLS}, got {N}")

    if spacing is Spacing.UNIFORM:
        edges = np.linspace(0.0, R_max, N + 1)
        ratio = None
    else:
        ratio = DEFAULT_GEOMETRIC_RATIO if ratio is None else ratio
        if ratio <= 1.0:
            raise GridError(f"geometric ratio must be > 1, got {ratio}")
        k = np.arange(N + 1, dtype=float)
        edges = R_max * np.expm1(k * math.log(ratio)) / math.expm1(N * math.log(ratio))
        edges[-1] = R_max

    return RadialGrid(
        edges=edges,
        n_eff=n,
        angular_factor=sphere_area(d) / alpha,
        d=d,
        alpha=alpha,
        spacing=spacing,
        ratio=ratio,
    )


def make_grid(
    R_max: float,
    N: int,
    dp: DerivedParameters,
    spacing: Spacing | str = Spacing.UNIFORM,
    ratio: float | None = None,
) -> RadialGrid:
    """Grid in the artificial frame of ``dp`` (n_eff = n, angular factor |S^(d-1)|/alpha)."""
    return build_grid(R_max, N, n=dp.n, d=dp.d, alpha=dp.alpha, spacing=spacing, ratio=ratio)


def grid_from_metadata(meta: dict[str, Any]) -> RadialGrid:
    """Rebuild a grid from the metadata written into CSV headers."""
    try:
        return build_grid(
            float(meta["R_max"]),
            int(meta["N"]),
            n=float(meta["n_eff"]),
            d=int(meta["d"]),
            alpha=float(meta.get("alpha", 1.0)),
            spacing=str(meta.get("spacing", Spacing.UNIFORM)),
            ratio=float(meta["ratio"]) if "ratio" in meta else None,
        )
    except KeyError as e:
        raise GridError(f"grid metadata is missing {e.args[0]!r}") from e


@dataclass(frozen=True)
class BarenblattTail:
    """Marks a field as scale * lam^n B(lam r) so that its tail beyond R_max is known in closed form."""

    lam: float = 1.0
    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values at the cell centers of a grid."""

    grid: RadialGrid
    values: np.ndarray
    tail: BarenblattTail | None = field(default=None)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise GridError(f"field has {values.shape} values for a grid of {self.grid.size} cells")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def density(cls, grid: RadialGrid, values: np.ndarray, tail: BarenblattTail | None = None) -> RadialField:
        """Build a field that must be nonnegative."""
        result = cls(grid, values, tail)
        result.require_nonnegative()
        return result

    def require_nonnegative(self) -> None:
        if np.any(self.values < 0.0):
            worst = int(np.argmin(self.values))
            raise NegativeDensityError(f"negative density {self.values[worst]:.3e} at r = {self.grid.nodes[worst]:.6g}")

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.values)

    def with_values(self, values: np.ndarray) -> RadialField:
        return RadialField(self.grid, values)

    def scaled(self, factor: float) -> RadialField:
        tail = None if self.tail is None else BarenblattTail(self.tail.lam, self.tail.scale * factor)
        return RadialField(self.grid, factor * self.values, tail)

    def renormalized(self, mass_target: float) -> RadialField:
        """Multiply by a constant so that the discrete mass equals ``mass_target``."""
        mass = self.mass
        if mass <= 0.0:
            raise ParameterError("cannot renormalize a field with nonpositive mass")
        return self.scaled(mass_target / mass)


def aubin_talenti(r: float | np.ndarray, sigma: float, p: float) -> float | np.ndarray:
    """g(r) = (1 + r^sigma)^(-1/(p-1))."""
    if sigma <= 0.0 or p <= 1.0:
        raise ParameterError(f"aubin_talenti needs sigma > 0 and p > 1, got sigma={sigma}, p={p}")
    return (1.0 + np.power(r, sigma)) ** (-1.0 / (p - 1.0))


def barenblatt_stationary(r: float | np.ndarray, m: float) -> float | np.ndarray:
    """Stationary profile (1 + r^2)^(1/(m-1)) of the rescaled flow."""
    if not 0.0 < m < 1.0:
        raise ParameterError(f"m must lie in (0, 1), got {m}")
    return np.exp(np.log1p(np.square(r)) / (m - 1.0))


def mass_closed_form(dp: DerivedParameters, d: int | None = None) -> float:
    """Weighted mass of the stationary profile, |S^(d-1)| (1/sigma) B((d-gamma)/sigma, delta - (d-gamma)/sigma).

    Raises:
        ParameterError: delta <= n/2 (the profile is not integrable)
    """
    d = dp.d if d is None else d
    a = (d - dp.gamma) / dp.sigma
    b = dp.delta - a
    if b <= 0.0:
        raise ParameterError(f"the Barenblatt profile is not integrable: delta = {dp.delta:.6g} <= n/2 = {a:.6g}")
    return sphere_area(d) / dp.sigma * float(beta_function(a, b))


def barenblatt_tail(R: float, dp: DerivedParameters, exponent: float = 1.0, lam: float = 1.0) -> float:
    """Closed-form integral over {s > R} of (lam^n B(lam s))^exponent against the artificial measure.

    Uses the regularized incomplete Beta function; returns inf when the power is not integrable.
    """
    a = dp.n / 2.0
    b = exponent * dp.delta - a
    if b <= 0.0:
        return math.inf
    x = 1.0 / (1.0 + (lam * R) ** 2)
    tail = 0.5 * float(beta_function(a, b)) * float(betainc(b, a, x))
    return sphere_area(dp.d) / dp.alpha * lam ** (dp.n * (exponent - 1.0)) * tail


def self_similar_R(t: float, dp: DerivedParameters) -> float:
    """Dilation R(t) = (1 + alpha^2 xi_n t)^(1/xi_n) with R(0) = 1 and dR/dt = alpha^2 R^(n(1-m)-1).

    Raises:
        ParameterError: t < 0, or xi_n <= 0 (very fast diffusion)
    """
    if dp.xi_n <= 0.0:
        raise ParameterError(f"self-similar scaling needs n(m - m_c) > 0, got {dp.xi_n:.6g}")
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    return (1.0 + dp.alpha**2 * dp.xi_n * t) ** (1.0 / dp.xi_n)


def barenblatt_evolving(
    t: float,
    r: float | np.ndarray,
    M: float,
    dp: DerivedParameters,
    lam: float = 1.0,
) -> float | np.ndarray:
    """Barenblatt solution of mass-scale M at original time t and original radius r.

    ``lam`` rescales the dilation R(t) -> R(t)/lam; the flow reconstruction uses the
    normalization lam = dp.lambda_scale.

    Raises:
        ParameterError: t <= 0 or M <= 0
    """
    if t <= 0.0:
        raise ParameterError(f"t must be positive, got {t}")
    if M <= 0.0:
        raise ParameterError(f"mass must be positive, got {M}")
    ratio = M / mass_closed_form(dp)
    k = ratio ** ((1.0 - dp.m) / dp.xi)
    radius = (self_similar_R(t, dp) / lam) ** (1.0 / dp.alpha)
    x = k * np.asarray(r, dtype=float) / radius
    return ratio ** (dp.sigma / dp.xi) * radius ** (-(dp.d - dp.gamma)) * (1.0 + x**dp.sigma) ** (-dp.delta)


class _ProfileFamily(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    normalization: float | None = Field(default=None, gt=0.0, description="Target weighted mass; None keeps the natural mass")


class AubinTalenti(_ProfileFamily):
    family: Literal["aubin_talenti"] = "aubin_talenti"
    sigma: float = Field(..., gt=0.0)
    p: float = Field(..., gt=1.0)


class BarenblattStationary(_ProfileFamily):
    family: Literal["barenblatt_stationary"] = "barenblatt_stationary"
    m: float = Field(..., gt=0.0, lt=1.0)


class BarenblattEvolving(_ProfileFamily):
    family: Literal["barenblatt_evolving"] = "barenblatt_evolving"
    t: float = Field(..., gt=0.0)
    mass: float = Field(..., gt=0.0)
    lam: float = Field(default=1.0, gt=0.0)


class ScaledBarenblatt(_ProfileFamily):
    family: Literal["scaled_barenblatt"] = "scaled_barenblatt"
    lam: float = Field(..., gt=0.0)


ProfileSpec = Annotated[
    AubinTalenti | BarenblattStationary | BarenblattEvolving | ScaledBarenblatt,
    Field(discriminator="family"),
]


def project(spec: ProfileSpec, grid: RadialGrid, dp: DerivedParameters) -> RadialField:
    """Evaluate a profile at the cell centers, optionally renormalized to a target mass."""
    s = grid.nodes
    tail: BarenblattTail | None = None
    match spec:
        case AubinTalenti(sigma=sigma, p=p):
            values = aubin_talenti(grid.original_radius(), sigma, p)
        case BarenblattStationary(m=m):
            values = barenblatt_stationary(s, m)
            if m == dp.m:
                tail = BarenblattTail()
        case ScaledBarenblatt(lam=lam):
            values = lam**dp.n * barenblatt_stationary(lam * s, dp.m)
            tail = BarenblattTail(lam=lam)
        case BarenblattEvolving(t=t, mass=mass, lam=lam):
            values = barenblatt_evolving(t, grid.original_radius(), mass, dp, lam=lam)
        case _:
            raise ParameterError(f"unknown profile family {spec!r}")

    result = RadialField.density(grid, np.asarray(values, dtype=float), tail)
    if spec.normalization is not None:
        result = result.renormalized(spec.normalization)
    return result


def stationary_reference(grid: RadialGrid, dp: DerivedParameters) -> RadialField:
    """The projected stationary profile B with its analytic tail attached."""
    return project(BarenblattStationary(m=dp.m), grid, dp)
