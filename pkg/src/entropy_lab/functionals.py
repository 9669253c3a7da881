"""
Scalar functionals of radial densities.

Norms, relative entropy and Fisher information against a Barenblatt
reference, the tail functional, best matching, linearized forms, the GNS
deficit and the ratios used as inequality diagnostics. Derivatives are
edge differences of cell-centered values, the same stencil the flow
solver uses for its fluxes, so that dF/dt = -I holds for the
semi-discrete scheme.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize_scalar

from entropy_lab.constants import DerivedParameters, gns_norms, gns_optimal_constant
from entropy_lab.errors import GridError, LineSearchError, NegativeDensityError, ParameterError
from entropy_lab.observability import get_logger
from entropy_lab.profiles import RadialField, RadialGrid, aubin_talenti, barenblatt_stationary, barenblatt_tail

logger = get_logger(__name__)

REPORT_COLUMNS = ("t", "F", "I", "Q", "mass", "second_moment", "tail_A", "relerr_sup")
TAIL_GROWTH_THRESHOLD = 1.1


class EntropyReport(BaseModel):
    """Functionals of one density against its reference; Q is NaN when F = 0."""

    model_config = ConfigDict(frozen=True)

    t: float = 0.0
    F: float = Field(..., description="Relative entropy")
    I: float = Field(..., description="Relative Fisher information")  # noqa: E741
    Q: float = Field(..., description="Quotient I/F")
    mass: float
    second_moment: float
    tail_A: float
    relerr_sup: float

    @property
    def quotient_defined(self) -> bool:
        return not math.isnan(self.Q)

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, column) for column in REPORT_COLUMNS)


class DeficitSpec(BaseModel):
    """Constants of the GNS deficit for dimension d and exponent p."""

    model_config = ConfigDict(frozen=True)

    d: int
    p: float
    chi: float
    K_gns: float = Field(..., description="Normalization with deficit[g] = 0 on the evaluation grid")
    K_closed: float = Field(..., description="Same normalization from closed-form norms of g")
    C_gns: float = Field(..., description="Optimal constant of the GNS inequality")


def _require_same_grid(a: RadialField, b: RadialField) -> None:
    if not a.grid.same_as(b.grid):
        raise GridError("fields live on different grids")


def _edge_difference(values: np.ndarray) -> np.ndarray:
    return np.diff(values)


def _edge_average(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values[:-1] + values[1:])


def weighted_norm(f: RadialField, q: float, weight_exponent: float = 0.0) -> float:
    """(integral |f|^q s^weight_exponent dmu)^(1/q) in the artificial frame.

    Raises:
        ParameterError: q < 1 or a weight that is not integrable at the origin
    """
    if q < 1.0:
        raise ParameterError(f"q must be >= 1, got {q}")
    grid = f.grid
    if grid.n_eff + weight_exponent <= 0.0:
        raise ParameterError(f"weight s^{weight_exponent} is not integrable at the origin in dimension {grid.n_eff}")
    integrand = np.abs(f.values) ** q
    if weight_exponent:
        integrand = integrand * grid.nodes**weight_exponent
    return grid.integrate(integrand) ** (1.0 / q)


def _reference_tail(ref: RadialField, dp: DerivedParameters, exponent: float) -> float:
    if ref.tail is None:
        return 0.0
    scale = ref.tail.scale**exponent
    return scale * barenblatt_tail(ref.grid.r_max, dp, exponent=exponent, lam=ref.tail.lam)


def relative_entropy(v: RadialField, ref: RadialField, m: float, dp: DerivedParameters | None = None) -> float:
    """Free energy (1/(m-1)) integral (v^m - ref^m - m ref^(m-1)(v - ref)) dmu.

    When ``dp`` is given and ``ref`` carries a Barenblatt tail, the part of the
    integral beyond R_max (where v vanishes) is added in closed form.

    Raises:
        NegativeDensityError: v or ref has negative entries
    """
    _require_same_grid(v, ref)
    v.require_nonnegative()
    if np.any(ref.values <= 0.0):
        raise NegativeDensityError("the reference density must be positive")

    with np.errstate(divide="ignore"):
        x = v.values / ref.values - 1.0
        # ref^m [(1+x)^m - 1 - m x], evaluated without cancellation near x = 0
        bregman = np.expm1(m * np.log1p(x)) - m * x
    entropy = v.grid.integrate(ref.values**m * bregman) / (m - 1.0)
    if dp is not None:
        entropy += _reference_tail(ref, dp, m)
    return max(entropy, 0.0)


def _pressure_difference(v: RadialField, ref: RadialField, m: float, floor: float) -> tuple[np.ndarray, np.ndarray]:
    """v^(m-1) - ref^(m-1) per cell and the mask of cells where it is defined."""
    values = np.maximum(v.values, floor) if floor > 0.0 else v.values
    defined = values > 0.0
    safe = np.where(defined, values, ref.values)
    with np.errstate(divide="ignore"):
        x = safe / ref.values - 1.0
        w = ref.values ** (m - 1.0) * np.expm1((m - 1.0) * np.log1p(x))
    return w, defined


def relative_fisher(v: RadialField, ref: RadialField, dp: DerivedParameters, floor: float = 0.0) -> float:
    """Relative Fisher information m/(1-m) integral v |alpha d_r (v^(m-1) - ref^(m-1))|^2 dmu.

    Pressures below ``floor`` are evaluated at the floor. Without a floor,
    edges touching a vanishing cell are skipped and the degeneracy is logged.
    """
    _require_same_grid(v, ref)
    v.require_nonnegative()
    m = dp.m
    w, defined = _pressure_difference(v, ref, m, floor)
    edge_ok = defined[:-1] & defined[1:]
    if not np.all(edge_ok):
        logger.debug("fisher_degenerate_pressure", skipped_edges=int(np.count_nonzero(~edge_ok)))

    grid = v.grid
    terms = dp.alpha**2 * _edge_average(v.values) * _edge_difference(w) ** 2 * grid.edge_weights
    return m / (1.0 - m) * float(np.sum(terms[edge_ok]))


def second_moment(v: RadialField) -> float:
    """integral s^2 v dmu, i.e. integral |x|^(sigma-gamma) v dx in original variables."""
    return v.grid.integrate(v.grid.nodes**2 * v.values)


def _tail_profile(v: RadialField, dp: DerivedParameters) -> tuple[np.ndarray, np.ndarray]:
    """Edges S > 0 and S^(2 delta - n) * (mass beyond S) at each of them."""
    grid = v.grid
    cell_mass = grid.volumes * v.values
    beyond = _reference_tail(v, dp, 1.0)
    # mass outside edges[k] for k = 1..N
    outer = np.append(np.cumsum(cell_mass[::-1])[::-1][1:], 0.0) + beyond
    edges = grid.edges[1:]
    return edges, edges ** (2.0 * dp.delta - dp.n) * outer


def tail_A(v: RadialField, dp: DerivedParameters) -> float:
    """sup over grid edges R of R^(sigma/(1-m) - (d-gamma)) times the weighted mass beyond R."""
    v.require_nonnegative()
    _, values = _tail_profile(v, dp)
    return float(np.max(values))


def tail_growth_flag(v: RadialField, dp: DerivedParameters) -> bool:
    """True when A[v] on the full grid exceeds A restricted to R <= R_max/2 by more than 10%."""
    edges, values = _tail_profile(v, dp)
    inner = values[edges <= 0.5 * v.grid.r_max]
    if inner.size == 0 or np.max(inner) <= 0.0:
        return bool(np.max(values) > 0.0)
    return bool(np.max(values) > TAIL_GROWTH_THRESHOLD * np.max(inner))


def scaled_barenblatt_values(grid: RadialGrid, lam: float, m: float) -> np.ndarray:
    """lam^n B(lam s) on the grid: the mass-preserving dilation family."""
    return lam**grid.n_eff * barenblatt_stationary(lam * grid.nodes, m)


def best_matching_entropy(v: RadialField, m: float, bound: float = 3.0, xatol: float = 1e-8) -> tuple[float, float]:
    """Minimize the relative entropy over the family lam^n B(lam s).

    Returns:
        (F_star, lam_star)

    Raises:
        LineSearchError: the bounded line search on log(lam) did not converge
    """
    v.require_nonnegative()

    def entropy_at(log_lam: float) -> float:
        ref = RadialField(v.grid, scaled_barenblatt_values(v.grid, math.exp(log_lam), m))
        return relative_entropy(v, ref, m)

    result = minimize_scalar(entropy_at, bounds=(-bound, bound), method="bounded", options={"xatol": xatol})
    if not result.success:
        raise LineSearchError(f"best matching line search failed: {result.message}")
    return float(result.fun), math.exp(float(result.x))


def linearized_forms(h: RadialField, dp: DerivedParameters) -> tuple[float, float]:
    """Quadratic forms (m/2) integral h^2 B^(2-m) dmu and m(1-m) integral |alpha h'|^2 B dmu."""
    grid = h.grid
    b = barenblatt_stationary(grid.nodes, dp.m)
    entropy = 0.5 * dp.m * grid.integrate(h.values**2 * b ** (2.0 - dp.m))
    fisher = dp.m * (1.0 - dp.m) * dp.alpha**2 * float(np.sum(_edge_average(b) * _edge_difference(h.values) ** 2 * grid.edge_weights))
    return entropy, fisher


def ckp_ratio(v: RadialField, ref: RadialField, dp: DerivedParameters) -> float:
    """||v - ref||_1 / sqrt(F[v]); NaN when F = 0."""
    entropy = relative_entropy(v, ref, dp.m)
    if entropy == 0.0:
        return math.nan
    distance = v.grid.integrate(np.abs(v.values - ref.values))
    return distance / math.sqrt(entropy)


def moment_bounds_ratios(v: RadialField, dp: DerivedParameters) -> tuple[float, float]:
    """Ratios bounded by the moment lemma.

    rho_1 = moment / (mass + A[v]) and
    rho_2 = (integral v^m)^(1/m) / (mass^(1-k) moment^k) with k = n(1-m)/(2m).

    Raises:
        ParameterError: v has zero mass
    """
    v.require_nonnegative()
    mass = v.mass
    if mass <= 0.0:
        raise ParameterError("moment bounds need a positive mass")
    moment = second_moment(v)
    rho_1 = moment / (mass + tail_A(v, dp))
    k = dp.n * (1.0 - dp.m) / (2.0 * dp.m)
    power_integral = v.grid.integrate(v.values**dp.m) ** (1.0 / dp.m)
    rho_2 = power_integral / (mass ** (1.0 - k) * moment**k)
    return rho_1, rho_2


def holder_interpolation_check(u: RadialField, R: float, p: float, mu: float, dp: DerivedParameters) -> float:
    """Ratio of ||u||_inf on B_R to the right-hand side of the Holder interpolation inequality (without C).

    The C^mu seminorm is the sup over pairs of grid points inside B_2R along a ray;
    R is an original radius.
    """
    if not 0.0 < mu <= 1.0:
        raise ParameterError(f"mu must lie in (0, 1], got {mu}")
    if R <= 0.0:
        raise ParameterError(f"R must be positive, got {R}")

    rho = u.grid.original_radius()
    inner = rho <= R
    outer = rho <= 2.0 * R
    if not np.any(inner):
        raise GridError(f"no grid point inside the ball of radius {R}")

    sup_inner = float(np.max(np.abs(u.values[inner])))
    values, radii = u.values[outer], rho[outer]
    lp_norm = float(np.dot(u.grid.volumes[outer], np.abs(values) ** p)) ** (1.0 / p)

    distance = np.abs(radii[:, None] - radii[None, :])
    jumps = np.abs(values[:, None] - values[None, :])
    off_diagonal = distance > 0.0
    seminorm = float(np.max(jumps[off_diagonal] / distance[off_diagonal] ** mu)) if np.any(off_diagonal) else 0.0

    dim = dp.d - dp.gamma
    a = dim / (dim + p * mu)
    rhs = seminorm**a * lp_norm ** (1.0 - a) + R ** (-dim / p) * lp_norm
    return sup_inner / rhs if rhs > 0.0 else math.inf


def _require_unweighted(grid: RadialGrid) -> None:
    if grid.alpha != 1.0 or grid.n_eff != grid.d:
        raise ParameterError("the GNS deficit is defined in the unweighted frame (beta = gamma = 0)")


def _gns_terms(f: RadialField, p: float) -> tuple[float, float, float]:
    grid = f.grid
    gradient = float(np.sum(_edge_difference(f.values) ** 2 * grid.edge_weights))
    lp1 = grid.integrate(np.abs(f.values) ** (p + 1.0))
    l2p = grid.integrate(np.abs(f.values) ** (2.0 * p))
    return gradient, lp1, l2p


def deficit_spec(d: int, p: float, grid: RadialGrid | None = None) -> DeficitSpec:
    """Deficit constants; K_gns is calibrated on ``grid`` when given so that deficit[g] vanishes there.

    Raises:
        ParameterError: d >= 3 with p > d/(d-2)
    """
    if p <= 1.0:
        raise ParameterError(f"p must be > 1, got {p}")
    C_gns = gns_optimal_constant(d, p)
    chi = (d + 2.0 - p * (d - 2.0)) / (d - p * (d - 4.0))
    c = 4.0 * (d - p * (d - 2.0)) / (p + 1.0)

    norms = gns_norms(d, p)
    K_closed = ((p - 1.0) ** 2 * norms["grad2"] + c * norms["p1"]) / norms["p2"] ** chi
    K_gns = K_closed
    if grid is not None:
        _require_unweighted(grid)
        g = RadialField(grid, aubin_talenti_values(grid, p))
        gradient, lp1, l2p = _gns_terms(g, p)
        K_gns = ((p - 1.0) ** 2 * gradient + c * lp1) / l2p**chi
    return DeficitSpec(d=d, p=p, chi=chi, K_gns=K_gns, K_closed=K_closed, C_gns=C_gns)


def aubin_talenti_values(grid: RadialGrid, p: float) -> np.ndarray:
    """The optimizer g = (1 + |x|^2)^(-1/(p-1)) at the cell centers of an unweighted grid."""
    return np.asarray(aubin_talenti(grid.nodes, 2.0, p), dtype=float)


def gns_deficit_parts(f: RadialField, spec: DeficitSpec) -> tuple[float, float]:
    """(positive part, deficit): the positive terms of the deficit and the deficit itself."""
    _require_unweighted(f.grid)
    p, d = spec.p, spec.d
    gradient, lp1, l2p = _gns_terms(f, p)
    positive = (p - 1.0) ** 2 * gradient + 4.0 * (d - p * (d - 2.0)) / (p + 1.0) * lp1
    return positive, positive - spec.K_gns * l2p**spec.chi


def gns_deficit(f: RadialField, spec: DeficitSpec) -> float:
    """(p-1)^2 ||grad f||^2 + 4(d - p(d-2))/(p+1) ||f||_{p+1}^{p+1} - K ||f||_{2p}^{2p chi}."""
    return gns_deficit_parts(f, spec)[1]


def stability_rhs(f: RadialField, spec: DeficitSpec) -> float:
    """Infimum over phi = mu g(lam .) of integral |(p-1) grad f + f^p grad phi^(1-p)|^2 dx.

    On this family grad phi^(1-p) = kappa x with kappa = 2 mu^(1-p) lam^2 > 0, so the
    integrand is quadratic in kappa and the infimum is taken in closed form.
    """
    _require_unweighted(f.grid)
    f.require_nonnegative()
    grid, p = f.grid, spec.p
    derivative = _edge_difference(f.values) / grid.node_gaps
    drift = grid.interior_edges * _edge_average(f.values**p)
    weights = grid.edge_measures

    aa = float(np.sum(weights * drift**2))
    ab = float(np.sum(weights * (p - 1.0) * derivative * drift))
    bb = float(np.sum(weights * ((p - 1.0) * derivative) ** 2))
    if aa == 0.0:
        return bb
    kappa = max(-ab / aa, 0.0)
    return max(bb + 2.0 * kappa * ab + kappa**2 * aa, 0.0)


def improved_eep_margin(v: RadialField, ref: RadialField, dp: DerivedParameters, mu: float) -> float:
    """(I - 4 alpha^2 F) - mu/(4+mu) I; nonnegative when the improved inequality holds."""
    entropy = relative_entropy(v, ref, dp.m)
    fisher = relative_fisher(v, ref, dp)
    return fisher - 4.0 * dp.alpha**2 * entropy - mu / (4.0 + mu) * fisher


def entropy_report(v: RadialField, ref: RadialField, dp: DerivedParameters, t: float = 0.0, floor: float = 0.0) -> EntropyReport:
    """All row functionals of one density.

    F is the grid part of the relative entropy: the closed-form Barenblatt tail
    beyond R_max is not added, so F never exceeds ``relative_entropy(v, ref, dp.m, dp)``.
    Q and every rate fitted from a series use this grid value.
    """
    entropy = relative_entropy(v, ref, dp.m)
    fisher = relative_fisher(v, ref, dp, floor=floor)
    return EntropyReport(
        t=t,
        F=entropy,
        I=fisher,
        Q=fisher / entropy if entropy > 0.0 else math.nan,
        mass=v.mass,
        second_moment=second_moment(v),
        tail_A=tail_A(v, dp),
        relerr_sup=float(np.max(np.abs(v.values / ref.values - 1.0))),
    )
