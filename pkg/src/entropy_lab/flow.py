"""
Radial solver for the rescaled weighted fast diffusion equation.

Conservative finite volumes in the artificial-dimension frame:

    vol_i dV_i/dt = -(Phi_(i+1/2) - Phi_(i-1/2)),
    Phi_e = alpha^2 r_e^(n-1) Vhat_e (q_(i+1) - q_i) / (r_(i+1) - r_i),  q = V^(m-1) - r^2,

with zero flux at r = 0 and r = R_max. The projected stationary profile
(1 + r^2)^(1/(m-1)) has q = 1 and is an exact discrete steady state.
Backward Euler with damped Newton on the tridiagonal Jacobian is the
default; the explicit scheme is kept for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.linalg import solve_banded

from entropy_lab.constants import DerivedParameters
from entropy_lab.errors import ExplicitStepError, NegativeDensityError, NewtonDivergenceError, ParameterError
from entropy_lab.functionals import EntropyReport, entropy_report
from entropy_lab.observability import SolverMetrics, get_logger, get_meter, get_tracer
from entropy_lab.profiles import RadialField, RadialGrid, barenblatt_stationary, stationary_reference

logger = get_logger(__name__)
tracer = get_tracer(__name__)
solver_metrics = SolverMetrics(get_meter(__name__))

MAX_HALVINGS = 6
MAX_DAMPING = 30
MASS_DRIFT_TOLERANCE = 1e-9


class BackwardEulerNewton(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["implicit"] = "implicit"
    tol: float = Field(default=1e-10, gt=0.0, le=1e-6, description="Newton tolerance relative to max V")
    max_iter: int = Field(default=50, ge=1)


class Explicit(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["explicit"] = "explicit"
    cfl_safety: float = Field(default=0.4, gt=0.0, le=1.0)


Scheme = Annotated[BackwardEulerNewton | Explicit, Field(discriminator="kind")]


class FlowConfig(BaseModel):
    """Time stepping of one trajectory."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    grid: RadialGrid
    dt: float = Field(..., gt=0.0, description="Time step in self-similar time")
    t_end: float = Field(..., gt=0.0)
    scheme: Scheme = Field(default_factory=BackwardEulerNewton)
    floor: float | None = Field(default=None, ge=0.0, description="Positivity floor for pressure evaluation; None derives it from v0")
    record_every: int = Field(default=1, ge=1)
    snapshots: bool = Field(default=True, description="Keep v at every recorded row")

    @field_validator("grid")
    @classmethod
    def _grid_is_radial(cls, grid: Any) -> RadialGrid:
        if not isinstance(grid, RadialGrid):
            raise ValueError("grid must be a RadialGrid")
        return grid

    @property
    def steps(self) -> int:
        return math.ceil(self.t_end / self.dt - 1e-9)

    def echo(self) -> dict[str, Any]:
        echo = {"dt": self.dt, "t_end": self.t_end, "record_every": self.record_every, "scheme": self.scheme.kind}
        if isinstance(self.scheme, BackwardEulerNewton):
            echo |= {"newton_tol": self.scheme.tol, "newton_max_iter": self.scheme.max_iter}
        else:
            echo["cfl_safety"] = self.scheme.cfl_safety
        return echo | self.grid.metadata()


@dataclass(frozen=True)
class FlowState:
    t: float
    v: RadialField
    mass0: float
    newton_iters_last: int = 0


@dataclass
class FlowSeries:
    """Recorded rows of one trajectory, with optional snapshots of v per row."""

    rows: list[EntropyReport]
    grid: RadialGrid
    params: DerivedParameters
    config: dict[str, Any] = field(default_factory=dict)
    snapshots: list[np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def times(self) -> np.ndarray:
        return np.array([row.t for row in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def snapshot(self, index: int) -> RadialField:
        if self.snapshots is None:
            raise ParameterError("this series was recorded without snapshots")
        return RadialField(self.grid, self.snapshots[index])


class _Operator:
    """Flux divergence and its Jacobian for fixed grid and parameters."""

    def __init__(self, grid: RadialGrid, dp: DerivedParameters, floor: float) -> None:
        self.vol = grid.volumes
        self.coef = dp.alpha**2 * grid.edge_weights
        self.r2 = grid.nodes**2
        self.m = dp.m
        self.floor = floor

    def pressure(self, v: np.ndarray) -> np.ndarray:
        return np.maximum(v, self.floor) ** (self.m - 1.0)

    def dpressure(self, v: np.ndarray) -> np.ndarray:
        return np.where(v > self.floor, (self.m - 1.0) * np.maximum(v, self.floor) ** (self.m - 2.0), 0.0)

    def fluxes(self, v: np.ndarray) -> np.ndarray:
        q = self.pressure(v) - self.r2
        return self.coef * 0.5 * (v[:-1] + v[1:]) * np.diff(q)

    def divergence(self, v: np.ndarray) -> np.ndarray:
        """Phi_(i+1/2) - Phi_(i-1/2) with zero boundary fluxes."""
        padded = np.concatenate(([0.0], self.fluxes(v), [0.0]))
        return np.diff(padded)

    def residual(self, v: np.ndarray, v_old: np.ndarray, dt: float) -> np.ndarray:
        return self.vol * (v - v_old) + dt * self.divergence(v)

    def jacobian_bands(self, v: np.ndarray, dt: float) -> np.ndarray:
        """Banded (1, 1) storage of the residual Jacobian."""
        q = self.pressure(v) - self.r2
        dq = np.diff(q)
        vhat = 0.5 * (v[:-1] + v[1:])
        dp_ = self.dpressure(v)
        d_left = self.coef * (0.5 * dq - vhat * dp_[:-1])
        d_right = self.coef * (0.5 * dq + vhat * dp_[1:])

        bands = np.zeros((3, len(v)))
        bands[1] = self.vol
        bands[1, :-1] += dt * d_left
        bands[1, 1:] -= dt * d_right
        bands[0, 1:] = dt * d_right
        bands[2, :-1] = -dt * d_left
        return bands

    def cfl_step(self, v: np.ndarray, dr: np.ndarray, r: np.ndarray, alpha: float, safety: float) -> float:
        diffusion = 2.0 * alpha**2 * (1.0 - self.m) * self.pressure(v)
        drift = 4.0 * alpha**2 * r * dr
        return safety * float(np.min(dr**2 / (diffusion + drift)))


def _newton_solve(op: _Operator, v_old: np.ndarray, dt: float, scheme: BackwardEulerNewton, t: float) -> tuple[np.ndarray, int]:
    """One backward-Euler step by damped Newton; returns the new values and the iteration count."""
    v = v_old.copy()
    scale = float(np.max(v_old))
    threshold = scheme.tol * scale
    residual = op.residual(v, v_old, dt)
    norm = float(np.max(np.abs(residual) / op.vol))

    for iteration in range(1, scheme.max_iter + 1):
        step = solve_banded((1, 1), op.jacobian_bands(v, dt), -residual)
        damping = 1.0
        for _ in range(MAX_DAMPING):
            trial = v + damping * step
            if np.all(trial >= 0.0):
                trial_residual = op.residual(trial, v_old, dt)
                trial_norm = float(np.max(np.abs(trial_residual) / op.vol))
                if trial_norm <= norm or trial_norm <= threshold:
                    break
            damping *= 0.5
        else:
            raise NewtonDivergenceError(norm, iteration, t)
        if damping < 1.0:
            logger.debug("newton_step_damped", t=t, iteration=iteration, damping=damping)

        v, residual, norm = trial, trial_residual, trial_norm
        if norm <= threshold and damping * float(np.max(np.abs(step))) <= threshold:
            return v, iteration

    raise NewtonDivergenceError(norm, scheme.max_iter, t)


def _implicit_advance(
    op: _Operator, v: np.ndarray, dt: float, scheme: BackwardEulerNewton, t: float, depth: int = 0
) -> tuple[np.ndarray, int]:
    try:
        return _newton_solve(op, v, dt, scheme, t)
    except NewtonDivergenceError as e:
        solver_metrics.record_failure("implicit", type(e).__name__)
        if depth >= MAX_HALVINGS:
            raise
        logger.warning("newton_step_halved", t=t, dt=dt / 2.0, depth=depth + 1, residual=e.residual)
        half, first = _implicit_advance(op, v, dt / 2.0, scheme, t, depth + 1)
        result, second = _implicit_advance(op, half, dt / 2.0, scheme, t + dt / 2.0, depth + 1)
        return result, first + second


def _explicit_advance(
    op: _Operator, v: np.ndarray, dt: float, grid: RadialGrid, dp: DerivedParameters, scheme: Explicit, t: float
) -> np.ndarray:
    dr = np.diff(grid.edges)
    elapsed = 0.0
    while elapsed < dt * (1.0 - 1e-12):
        h = min(op.cfl_step(v, dr, grid.nodes, dp.alpha, scheme.cfl_safety), dt - elapsed)
        v = v - h * op.divergence(v) / op.vol
        if np.any(v < 0.0):
            solver_metrics.record_failure("explicit", "ExplicitStepError")
            raise ExplicitStepError(t + elapsed, h)
        elapsed += h
    return v


def _default_floor(v0: np.ndarray) -> float:
    positive = v0[v0 > 0.0]
    return min(1e-3 * float(np.min(positive)), 1e-12 * float(np.max(v0)))


def step(state: FlowState, cfg: FlowConfig, dp: DerivedParameters, floor: float | None = None) -> FlowState:
    """Advance one time step of size cfg.dt.

    Raises:
        NewtonDivergenceError: damped Newton failed after all step halvings
        ExplicitStepError: an explicit sub-step produced negative values
    """
    v = state.v.values
    floor = floor if floor is not None else cfg.floor if cfg.floor is not None else _default_floor(v)
    op = _Operator(cfg.grid, dp, floor)

    iterations = 0
    if isinstance(cfg.scheme, BackwardEulerNewton):
        new_values, iterations = _implicit_advance(op, v, cfg.dt, cfg.scheme, state.t)
    else:
        new_values = _explicit_advance(op, v, cfg.dt, cfg.grid, dp, cfg.scheme, state.t)
    solver_metrics.record_step(cfg.scheme.kind, iterations)
    return FlowState(t=state.t + cfg.dt, v=RadialField(cfg.grid, new_values), mass0=state.mass0, newton_iters_last=iterations)


def evolve(v0: RadialField, cfg: FlowConfig, dp: DerivedParameters, ref: RadialField | None = None) -> FlowSeries:
    """Integrate from v0 up to t_end, recording an EntropyReport every record_every steps.

    The reference defaults to the projected stationary profile; the first row is t = 0.

    Raises:
        NegativeDensityError: v0 has negative entries or no mass
        ParameterError: the floor exceeds 1e-12 of the initial maximum
    """
    dp.require_flow_range()
    v0.require_nonnegative()
    mass0 = v0.mass
    if mass0 <= 0.0:
        raise NegativeDensityError("initial data must have positive mass")
    floor = cfg.floor if cfg.floor is not None else _default_floor(v0.values)
    if floor > 1e-12 * float(np.max(v0.values)):
        raise ParameterError(f"floor {floor:g} exceeds 1e-12 times the initial maximum")

    ref = stationary_reference(cfg.grid, dp) if ref is None else ref
    steps = cfg.steps

    with tracer.start_as_current_span("flow.evolve") as span:
        span.set_attribute("flow.steps", steps)
        span.set_attribute("flow.scheme", cfg.scheme.kind)
        span.set_attribute("flow.cells", cfg.grid.size)

        state = FlowState(t=0.0, v=v0, mass0=mass0)
        rows = [entropy_report(v0, ref, dp, t=0.0, floor=floor)]
        snapshots = [v0.values] if cfg.snapshots else None
        total_iterations = 0

        for k in range(1, steps + 1):
            state = step(state, cfg, dp, floor=floor)
            # t = k dt exactly, no accumulated round-off
            state = FlowState(t=k * cfg.dt, v=state.v, mass0=mass0, newton_iters_last=state.newton_iters_last)
            total_iterations += state.newton_iters_last
            if k % cfg.record_every == 0 or k == steps:
                rows.append(entropy_report(state.v, ref, dp, t=state.t, floor=floor))
                if snapshots is not None:
                    snapshots.append(state.v.values)

        drift = abs(state.v.mass - mass0) / mass0
        if drift > MASS_DRIFT_TOLERANCE:
            logger.warning("flow_mass_drift", drift=drift, mass0=mass0)
        span.set_attribute("flow.mass_drift", drift)

    logger.info(
        "flow_evolve_completed",
        steps=steps,
        t_end=state.t,
        rows=len(rows),
        newton_iterations=total_iterations,
        F_final=rows[-1].F,
    )
    return FlowSeries(rows=rows, grid=cfg.grid, params=dp, config=cfg.echo(), snapshots=snapshots)


def self_similar_time_to_original(t: float, dp: DerivedParameters) -> tuple[float, float]:
    """(tau, R) for self-similar time t: R = exp(2 alpha^2 t) and R(tau) = R."""
    R = math.exp(2.0 * dp.alpha**2 * t)
    tau = (R**dp.xi_n - 1.0) / (dp.alpha**2 * dp.xi_n)
    return tau, R


def reconstruct_original(v: RadialField, t: float, dp: DerivedParameters) -> tuple[RadialField, float, float]:
    """Undo the self-similar change of variables at self-similar time t.

    U(s) = (lam/R)^n V(lam s / R) is represented exactly on the grid dilated by R/lam;
    the original radius of a node s is s^(1/alpha).

    Returns:
        (u on the dilated grid, original time tau, E = integral u^m |x|^-gamma dx)
    """
    tau, R = self_similar_time_to_original(t, dp)
    factor = R / dp.lambda_scale
    grid = v.grid
    dilated = RadialGrid(
        edges=grid.edges * factor,
        n_eff=grid.n_eff,
        angular_factor=grid.angular_factor,
        d=grid.d,
        alpha=grid.alpha,
        spacing=grid.spacing,
        ratio=grid.ratio,
    )
    u = RadialField(dilated, factor ** (-grid.n_eff) * v.values)
    energy = dilated.integrate(u.values**dp.m)
    return u, tau, energy


def renyi_energy(v: RadialField, t: float, dp: DerivedParameters) -> float:
    """E(t) = integral u^m |x|^-gamma dx of the reconstructed solution."""
    return reconstruct_original(v, t, dp)[2]


class PerturbedBarenblatt(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["perturbed"] = "perturbed"
    mode: int = Field(default=0, ge=0, description="0: dilation direction; k >= 1: cos(k pi r^2/(1+r^2))")
    amplitude: float = Field(default=0.05, ge=0.0)


class Bump(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["bump"] = "bump"
    center: float = Field(default=0.0, ge=0.0)
    width: float = Field(default=1.0, gt=0.0)


class HeavyTail(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["heavy_tail"] = "heavy_tail"
    exponent: float = Field(..., gt=0.0, description="Decay (1 + r^2)^(-exponent/2)")


InitialData = Annotated[PerturbedBarenblatt | Bump | HeavyTail, Field(discriminator="kind")]


def perturbation_shape(mode: int, grid: RadialGrid, dp: DerivedParameters) -> np.ndarray:
    """Bounded radial direction w with |w| <= 1 used by PerturbedBarenblatt."""
    r2 = grid.nodes**2
    if mode == 0:
        c = dp.n / (2.0 * dp.delta - dp.n)
        return (r2 - c) / (1.0 + r2) / max(1.0, c)
    return np.cos(mode * math.pi * r2 / (1.0 + r2))


def initial_data(kind: InitialData, grid: RadialGrid, dp: DerivedParameters, mass_target: float | None = None) -> RadialField:
    """Nonnegative initial density with weighted mass ``mass_target``.

    The default target is the discrete mass of the projected stationary profile.

    Raises:
        ParameterError: perturbation amplitude >= 1
        NegativeDensityError: the construction produced negative values or no mass
    """
    b = barenblatt_stationary(grid.nodes, dp.m)
    match kind:
        case PerturbedBarenblatt(mode=mode, amplitude=amplitude):
            if amplitude >= 1.0:
                raise ParameterError(f"perturbation amplitude must be < 1, got {amplitude}")
            values = b * (1.0 + amplitude * perturbation_shape(mode, grid, dp))
        case Bump(center=center, width=width):
            values = np.maximum(0.0, 1.0 - ((grid.nodes - center) / width) ** 2) ** 2
        case HeavyTail(exponent=exponent):
            values = (1.0 + grid.nodes**2) ** (-exponent / 2.0)
        case _:
            raise ParameterError(f"unknown initial data {kind!r}")

    field_ = RadialField.density(grid, values)
    if field_.mass <= 0.0:
        raise NegativeDensityError("initial data has no mass on the grid")
    target = grid.integrate(b) if mass_target is None else mass_target
    return field_.renormalized(target)
