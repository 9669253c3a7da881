"""
Theorem-level checks on recorded trajectories.

Every experiment consumes a FlowSeries only (rows plus optional
snapshots), so re-running it on a series read back from CSV reproduces
the same outputs.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.stats import linregress

from entropy_lab.constants import DerivedParameters, improved_eep_fraction, zeta_ckn
from entropy_lab.errors import ExperimentRefusedError, ParameterError
from entropy_lab.flow import FlowSeries, reconstruct_original
from entropy_lab.functionals import best_matching_entropy, tail_growth_flag
from entropy_lab.observability import get_logger
from entropy_lab.profiles import RadialField, barenblatt_stationary
from entropy_lab.spectrum import rate_prediction

logger = get_logger(__name__)

MIN_FIT_ROWS = 10
USABLE_ENTROPY = 1e2 * np.finfo(float).eps
RELATIVE_ENTROPY_CUTOFF = 1e-10
BASELINE_SLACK = 0.99
IMPROVED_SLACK = 0.95
LINEARIZED_TOLERANCE = 0.05
MASS_MATCH_TOLERANCE = 1e-8


class RateFit(BaseModel):
    """Least-squares exponential rate of F over a window, with verdicts against the predictions."""

    model_config = ConfigDict(frozen=True)

    window: tuple[float, float]
    slope: float
    r_squared: float
    rows_used: int
    predictions: tuple[float, float, float] | None = None
    linearized_reference: float | None = None
    baseline_ok: bool | None = None
    improved_ok: bool | None = None
    linearized_ok: bool | None = None

    @property
    def passed(self) -> bool:
        return all(verdict is not False for verdict in (self.baseline_ok, self.improved_ok, self.linearized_ok))


class GhpSandwich(BaseModel):
    """Constants with C_under B <= v <= C_over B for all recorded t >= onset."""

    model_config = ConfigDict(frozen=True)

    onset: float
    C_under: float
    C_over: float
    offending_radius: float | None = None

    @property
    def straddles_one(self) -> bool:
        return self.C_under <= 1.0 + 1e-12 and self.C_over >= 1.0 - 1e-12


class ThresholdReport(BaseModel):
    """First times after which sup |v/B - 1| stays below each epsilon; None marks a censored epsilon."""

    model_config = ConfigDict(frozen=True)

    epsilons: list[float]
    t_star_empirical: list[float | None]
    a_fit: float | None
    monotone: bool
    ghp: GhpSandwich | None = None


class RenyiCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    violation: float
    margin: float
    slope: float
    exponent: float


class DecayVerdict(BaseModel):
    """Whether F(t) <= F(0) exp(-rate t) held on every recorded row, and by how much."""

    model_config = ConfigDict(frozen=True)

    passed: bool
    margin: float
    rate: float
    vacuous: bool = False


def fit_exponential_rate(
    t: np.ndarray, values: np.ndarray, window: tuple[float, float] | None = None
) -> tuple[float, float, int, tuple[float, float]]:
    """Slope of -log(values) against t over the window, its r^2, the rows used and the window.

    Raises:
        ParameterError: empty window or fewer than 10 usable rows
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (0.5 * float(t[-1]), float(t[-1]))
    t_lo, t_hi = window
    if not t_hi > t_lo:
        raise ParameterError(f"degenerate fit window {window}")

    usable = (t >= t_lo) & (t <= t_hi) & (values > USABLE_ENTROPY)
    if np.count_nonzero(usable) < MIN_FIT_ROWS:
        raise ParameterError(f"only {np.count_nonzero(usable)} usable rows in window {window}, need {MIN_FIT_ROWS}")
    fit = linregress(t[usable], -np.log(values[usable]))
    return float(fit.slope), float(fit.rvalue**2), int(np.count_nonzero(usable)), (t_lo, t_hi)


def fit_decay_rate(
    series: FlowSeries,
    window: tuple[float, float] | None = None,
    gap: float | None = None,
    radial_gap: float | None = None,
) -> RateFit:
    """Fit the decay rate of F over ``window`` (default [t_end/2, t_end]).

    With ``gap`` the baseline and improved verdicts are evaluated against
    rate_prediction; with ``radial_gap`` the slope is compared with the
    linearized radial rate 2(1-m) Lambda_0.
    """
    slope, r_squared, used, window = fit_exponential_rate(series.times, series.column("F"), window)
    dp = series.params
    predictions = baseline_ok = improved_ok = None
    if gap is not None:
        predictions = rate_prediction(dp, gap)
        baseline_ok = slope >= BASELINE_SLACK * predictions[0]
        improved_ok = slope >= IMPROVED_SLACK * predictions[1]

    linearized_reference = linearized_ok = None
    if radial_gap is not None:
        linearized_reference = 2.0 * (1.0 - dp.m) * radial_gap
        linearized_ok = abs(slope - linearized_reference) / linearized_reference <= LINEARIZED_TOLERANCE

    logger.info("decay_rate_fitted", slope=slope, r_squared=r_squared, rows=used, window=list(window))
    return RateFit(
        window=window,
        slope=slope,
        r_squared=r_squared,
        rows_used=used,
        predictions=predictions,
        linearized_reference=linearized_reference,
        baseline_ok=baseline_ok,
        improved_ok=improved_ok,
        linearized_ok=linearized_ok,
    )


def _usable_rows(series: FlowSeries) -> np.ndarray:
    entropy = series.column("F")
    return entropy > RELATIVE_ENTROPY_CUTOFF * max(float(entropy[0]), USABLE_ENTROPY)


def check_entropy_production(series: FlowSeries, skip: int = 0) -> float:
    """max over consecutive row pairs of |dF/dt + I| / I with I averaged over the pair.

    Pairs with I = 0 or F at round-off level are skipped; 0 when nothing is left.
    """
    if len(series) < 3:
        raise ParameterError("entropy production check needs at least 3 rows")
    t, entropy, fisher = series.times, series.column("F"), series.column("I")
    usable = _usable_rows(series)
    worst = 0.0
    for k in range(skip, len(series) - 1):
        fisher_mid = 0.5 * (fisher[k] + fisher[k + 1])
        if fisher_mid <= 0.0 or not (usable[k] and usable[k + 1]):
            continue
        derivative = (entropy[k + 1] - entropy[k]) / (t[k + 1] - t[k])
        worst = max(worst, abs(derivative + fisher_mid) / fisher_mid)
    return worst


def check_quotient_ode(series: FlowSeries) -> float:
    """max over rows of the positive part of (dQ/dt - Q(Q-4)) / Q^2.

    Raises:
        ExperimentRefusedError: the run is weighted (beta or gamma nonzero)
    """
    dp = series.params
    if dp.beta != 0.0 or dp.gamma != 0.0:
        raise ExperimentRefusedError("the quotient inequality is only established without weights (beta = gamma = 0)")
    t, quotient = series.times, series.column("Q")
    usable = _usable_rows(series) & ~np.isnan(quotient)
    worst = 0.0
    for k in range(len(series) - 1):
        if not (usable[k] and usable[k + 1]):
            continue
        q_mid = 0.5 * (quotient[k] + quotient[k + 1])
        derivative = (quotient[k + 1] - quotient[k]) / (t[k + 1] - t[k])
        worst = max(worst, (derivative - q_mid * (q_mid - 4.0)) / q_mid**2)
    return worst


def _t_star(t: np.ndarray, relerr: np.ndarray, epsilon: float) -> float | None:
    above = np.nonzero(relerr > epsilon)[0]
    if above.size == 0:
        return float(t[0])
    last = int(above[-1])
    if last == len(t) - 1:
        return None
    return float(t[last + 1])


def ghp_sandwich(series: FlowSeries, onset: float = 0.0) -> GhpSandwich:
    """Smallest C_over and largest C_under with C_under B <= v <= C_over B on rows t >= onset.

    Data whose tail functional grows with the truncation radius report C_over = inf
    and the radius where the ratio peaks.
    """
    if series.snapshots is None:
        raise ParameterError("the sandwich needs snapshots")
    grid = series.grid
    b = barenblatt_stationary(grid.nodes, series.params.m)
    selected = [k for k, row in enumerate(series.rows) if row.t >= onset]
    if not selected:
        raise ParameterError(f"no recorded row at t >= {onset}")

    ratios = np.array([series.snapshots[k] / b for k in selected])
    under, over = float(np.min(ratios)), float(np.max(ratios))
    if tail_growth_flag(series.snapshot(0), series.params):
        radius = float(grid.nodes[np.unravel_index(np.argmax(ratios), ratios.shape)[1]])
        logger.warning("ghp_unbounded_ratio", radius=radius)
        return GhpSandwich(onset=onset, C_under=under, C_over=math.inf, offending_radius=radius)
    return GhpSandwich(onset=onset, C_under=under, C_over=over)


def ghp_onset_scan(series: FlowSeries, onsets: Sequence[float]) -> list[GhpSandwich]:
    return [ghp_sandwich(series, onset) for onset in onsets]


def threshold_time(
    series_bundle: FlowSeries | Sequence[FlowSeries],
    epsilons: Sequence[float],
    ghp_onset: float | None = None,
) -> ThresholdReport:
    """Empirical threshold times t_star(epsilon) and the exponent of t_star ~ c epsilon^(-a).

    For a bundle the latest threshold over its members is reported. Censored
    epsilons (never reached before t_end) are excluded from the fit.
    """
    bundle = [series_bundle] if isinstance(series_bundle, FlowSeries) else list(series_bundle)
    epsilons = [float(eps) for eps in epsilons]
    if any(later >= earlier for earlier, later in zip(epsilons, epsilons[1:], strict=False)):
        raise ParameterError("epsilons must be strictly decreasing")

    t_stars: list[float | None] = []
    for eps in epsilons:
        members = [_t_star(series.times, series.column("relerr_sup"), eps) for series in bundle]
        t_stars.append(None if any(value is None for value in members) else max(value for value in members if value is not None))

    finite = [(eps, t) for eps, t in zip(epsilons, t_stars, strict=True) if t is not None]
    positive = [(eps, t) for eps, t in finite if t > 0.0]
    a_fit = None
    if len(positive) >= 2:
        fit = linregress(np.log([1.0 / eps for eps, _ in positive]), np.log([t for _, t in positive]))
        a_fit = float(fit.slope)
    times = [t for _, t in finite]
    monotone = all(later >= earlier for earlier, later in zip(times, times[1:], strict=False))

    ghp = ghp_sandwich(bundle[0], ghp_onset) if ghp_onset is not None and bundle[0].snapshots is not None else None
    logger.info("threshold_times_computed", t_star=t_stars, a_fit=a_fit, monotone=monotone)
    return ThresholdReport(epsilons=epsilons, t_star_empirical=t_stars, a_fit=a_fit, monotone=monotone, ghp=ghp)


def renyi_growth_check(series: FlowSeries, dp: DerivedParameters | None = None) -> RenyiCheck:
    """Growth E(tau)^k >= E(0)^k + K tau of the entropy power, k = (m - m_c)/(1 - m).

    K is the growth slope of the Barenblatt solution of the same mass (equality
    for Barenblatt data, equality at tau = 0 for any data). Violation and margin
    are normalized by E(0)^k.
    """
    dp = series.params if dp is None else dp
    if series.snapshots is None:
        raise ParameterError("the Renyi check needs snapshots")
    grid = series.grid
    k = (dp.m - dp.m_c) / (1.0 - dp.m)

    b = barenblatt_stationary(grid.nodes, dp.m)
    mass_ratio = series.snapshot(0).mass / grid.integrate(b)
    # Barenblatt of mass mu*M: E scales by mu^((m sigma - (d-gamma)(1-m))/xi)
    scale = mass_ratio ** ((dp.m * dp.sigma - (dp.d - dp.gamma) * (1.0 - dp.m)) / dp.xi)
    energy_b = scale * grid.integrate(b**dp.m)
    slope = dp.alpha**2 * dp.xi_n * dp.lambda_scale ** (-dp.xi_n) * energy_b**k

    powers, taus = [], []
    for index, row in enumerate(series.rows):
        _, tau, energy = reconstruct_original(series.snapshot(index), row.t, dp)
        powers.append(energy**k)
        taus.append(tau)
    powers_arr, taus_arr = np.array(powers), np.array(taus)
    base = powers_arr[0]
    excess = (powers_arr - base - slope * taus_arr) / base

    violation = max(0.0, float(-np.min(excess)))
    margin = float(np.min(excess[1:])) if len(excess) > 1 else 0.0
    logger.info("renyi_growth_checked", violation=violation, margin=margin, slope=slope)
    return RenyiCheck(violation=violation, margin=margin, slope=slope, exponent=k)


def _decay_verdict(times: np.ndarray, values: np.ndarray, rate: float) -> DecayVerdict:
    if values[0] <= 0.0:
        return DecayVerdict(passed=True, margin=0.0, rate=rate, vacuous=True)
    positive = values > 0.0
    bound = values[0] * np.exp(-rate * times)
    # log(bound / F) on rows with F > 0; rows with F = 0 satisfy the bound
    margins = np.log(bound[positive] / values[positive])
    margin = float(np.min(margins[1:])) if np.count_nonzero(positive) > 1 else math.inf
    return DecayVerdict(passed=margin >= -1e-9, margin=margin, rate=rate)


def improved_rate_from_zero(series: FlowSeries, gap: float, dp: DerivedParameters | None = None) -> DecayVerdict:
    """Does F(t) <= F(0) exp(-(4 alpha^2 + zeta) t) hold on every recorded row?

    Raises:
        ExperimentRefusedError: the initial data is not mass-matched to the reference or has a growing tail
    """
    dp = series.params if dp is None else dp
    grid = series.grid
    reference_mass = grid.integrate(barenblatt_stationary(grid.nodes, dp.m))
    mass0 = series.rows[0].mass
    if abs(mass0 - reference_mass) > MASS_MATCH_TOLERANCE * reference_mass:
        raise ExperimentRefusedError(f"initial mass {mass0:.12g} does not match the reference mass {reference_mass:.12g}")
    if series.snapshots is not None and tail_growth_flag(series.snapshot(0), dp):
        raise ExperimentRefusedError("initial data has a tail functional that grows with the domain")

    rate = 4.0 * dp.alpha**2 + zeta_ckn(dp, gap)
    verdict = _decay_verdict(series.times, series.column("F"), rate)
    logger.info("improved_rate_from_zero", passed=verdict.passed, margin=verdict.margin, rate=rate)
    return verdict


def improved_eep_check(series: FlowSeries, mu: float) -> float:
    """max over rows of the positive part of (mu/(4+mu) I - (I - 4 alpha^2 F)) / I."""
    alpha2 = series.params.alpha**2
    fraction = improved_eep_fraction(mu)
    worst = 0.0
    for row in series.rows:
        if row.I <= 0.0:
            continue
        worst = max(worst, (fraction * row.I - (row.I - 4.0 * alpha2 * row.F)) / row.I)
    return worst


def optimized_entropy_decay(series: FlowSeries, zeta: float) -> DecayVerdict:
    """Best-matching entropy F_star(t) against F_star(0) exp(-(4 alpha^2 + zeta) t), from the snapshots."""
    if series.snapshots is None:
        raise ParameterError("the optimized entropy needs snapshots")
    dp = series.params
    values = np.array([best_matching_entropy(RadialField(series.grid, snapshot), dp.m)[0] for snapshot in series.snapshots])
    return _decay_verdict(series.times, values, 4.0 * dp.alpha**2 + zeta)
