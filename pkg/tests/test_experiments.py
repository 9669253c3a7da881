"""
Tests for trajectory experiments.
"""

import math

import numpy as np
import pytest

from entropy_lab.errors import ExperimentRefusedError, ParameterError
from entropy_lab.experiments import (
    check_entropy_production,
    check_quotient_ode,
    fit_decay_rate,
    fit_exponential_rate,
    ghp_onset_scan,
    ghp_sandwich,
    improved_eep_check,
    improved_rate_from_zero,
    optimized_entropy_decay,
    renyi_growth_check,
    threshold_time,
)
from entropy_lab.flow import FlowConfig, HeavyTail, PerturbedBarenblatt, evolve, initial_data

TIMES = np.linspace(0.0, 20.0, 201)


class TestRateFit:
    """Tests for exponential rate fits."""

    def test_exact_exponential(self, make_series, weighted_dp, small_grid):
        """Test that a pure exponential at the linearized rate passes every verdict."""
        series = make_series(TIMES, 2.0 * np.exp(-0.35 * TIMES), weighted_dp, small_grid)
        fit = fit_decay_rate(series, gap=3.5, radial_gap=3.5)
        assert fit.slope == pytest.approx(0.35, rel=1e-10)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.window == (10.0, 20.0)
        assert fit.rows_used == 101
        assert fit.predictions == pytest.approx((0.25, 0.30, 0.35))
        assert fit.baseline_ok and fit.improved_ok and fit.linearized_ok
        assert fit.passed

    def test_slow_decay_fails_baseline(self, make_series, weighted_dp, small_grid):
        """Test that a slope below 0.99 times the baseline fails."""
        series = make_series(TIMES, np.exp(-0.2 * TIMES), weighted_dp, small_grid)
        fit = fit_decay_rate(series, gap=3.5)
        assert fit.baseline_ok is False
        assert fit.improved_ok is False
        assert fit.linearized_ok is None
        assert not fit.passed

    def test_between_baseline_and_improved(self, make_series, weighted_dp, small_grid):
        """Test a slope that beats the baseline but not the improved rate."""
        series = make_series(TIMES, np.exp(-0.26 * TIMES), weighted_dp, small_grid)
        fit = fit_decay_rate(series, gap=3.5)
        assert fit.baseline_ok is True
        assert fit.improved_ok is False

    def test_no_predictions_without_gap(self, make_series, weighted_dp, small_grid):
        """Test that a bare fit carries no verdicts and passes."""
        series = make_series(TIMES, np.exp(-0.1 * TIMES), weighted_dp, small_grid)
        fit = fit_decay_rate(series)
        assert fit.predictions is None
        assert fit.passed

    def test_window_selects_regime(self, make_series, weighted_dp, small_grid):
        """Test that an early window sees the transient rate and the default window the asymptotic one."""
        entropy = np.where(TIMES < 5.0, np.exp(-0.6 * TIMES), math.exp(-3.0) * np.exp(-0.35 * (TIMES - 5.0)))
        series = make_series(TIMES, entropy, weighted_dp, small_grid)
        assert fit_decay_rate(series, window=(0.0, 4.0)).slope == pytest.approx(0.6, rel=1e-10)
        assert fit_decay_rate(series).slope == pytest.approx(0.35, rel=1e-10)

    def test_round_off_rows_excluded(self):
        """Test that rows with F at machine precision are not fitted."""
        t = np.linspace(0.0, 10.0, 101)
        values = np.exp(-2.0 * t)
        values[60:] = 0.0
        slope, _, used, _ = fit_exponential_rate(t, values, (0.0, 10.0))
        assert used == 60
        assert slope == pytest.approx(2.0, rel=1e-10)

    @pytest.mark.parametrize("window", [(1.0, 1.0), (0.0, 0.5)])
    def test_bad_windows(self, window):
        """Test a degenerate window and a window with fewer than 10 rows."""
        with pytest.raises(ParameterError):
            fit_exponential_rate(TIMES, np.exp(-TIMES), window)


class TestEntropyProduction:
    """Tests for dF/dt = -I."""

    def test_synthetic_pair(self, make_series, gns_dp, small_grid):
        """Test an exact pair F = exp(-4t), I = 4F."""
        t = np.linspace(0.0, 1.0, 101)
        entropy = np.exp(-4.0 * t)
        assert check_entropy_production(make_series(t, entropy, gns_dp, small_grid)) <= 1e-4

    def test_detects_mismatch(self, make_series, gns_dp, small_grid):
        """Test that I = 8F is reported for F = exp(-4t)."""
        t = np.linspace(0.0, 1.0, 101)
        entropy = np.exp(-4.0 * t)
        series = make_series(t, entropy, gns_dp, small_grid, fisher=8.0 * entropy)
        assert check_entropy_production(series) == pytest.approx(0.5, rel=1e-3)

    def test_along_trajectory(self, small_grid, gns_dp):
        """Test the identity on a backward-Euler run after the first steps."""
        v0 = initial_data(PerturbedBarenblatt(mode=0, amplitude=0.1), small_grid, gns_dp)
        series = evolve(v0, FlowConfig(grid=small_grid, dt=1e-3, t_end=0.1, snapshots=False), gns_dp)
        assert check_entropy_production(series, skip=20) <= 0.02

    @pytest.mark.slow
    def test_reference_run(self, fine_grid, gns_dp):
        """Test a residual of at most one percent at dt = 1e-3 on 1024 cells after the first 10 steps."""
        v0 = initial_data(PerturbedBarenblatt(mode=0, amplitude=0.1), fine_grid, gns_dp)
        series = evolve(v0, FlowConfig(grid=fine_grid, dt=1e-3, t_end=0.1, snapshots=False), gns_dp)
        assert check_entropy_production(series, skip=10) <= 0.01

    @pytest.mark.slow
    def test_residual_halves_with_dt(self, fine_grid, gns_dp):
        """Test that halving dt halves the residual of the first-order scheme."""
        v0 = initial_data(PerturbedBarenblatt(mode=0, amplitude=0.1), fine_grid, gns_dp)
        residuals = []
        for dt, skip in ((4e-3, 10), (2e-3, 20)):
            series = evolve(v0, FlowConfig(grid=fine_grid, dt=dt, t_end=0.2, snapshots=False), gns_dp)
            residuals.append(check_entropy_production(series, skip=skip))
        assert residuals[1] / residuals[0] == pytest.approx(0.5, abs=0.1)

    def test_needs_three_rows(self, make_series, gns_dp, small_grid):
        """Test that two rows are not enough."""
        with pytest.raises(ParameterError):
            check_entropy_production(make_series(np.array([0.0, 1.0]), np.array([1.0, 0.5]), gns_dp, small_grid))


class TestQuotientOde:
    """Tests for the quotient inequality."""

    def test_constant_quotient(self, make_series, gns_dp, small_grid):
        """Test that a constant Q above 4 shows no violation."""
        t = np.linspace(0.0, 1.0, 51)
        series = make_series(t, np.exp(-10.0 * t), gns_dp, small_grid, quotient=np.full_like(t, 10.0))
        assert check_quotient_ode(series) == 0.0

    def test_growing_quotient(self, make_series, gns_dp, small_grid):
        """Test that Q growing faster than Q(Q-4) is reported."""
        t = np.linspace(0.0, 0.1, 51)
        series = make_series(t, np.exp(-10.0 * t), gns_dp, small_grid, quotient=10.0 + 100.0 * t)
        assert check_quotient_ode(series) > 0.1

    def test_weighted_refused(self, make_series, weighted_dp, small_grid):
        """Test that weighted runs are refused."""
        series = make_series(TIMES, np.exp(-TIMES), weighted_dp, small_grid)
        with pytest.raises(ExperimentRefusedError):
            check_quotient_ode(series)

    def test_along_trajectory(self, perturbed_series):
        """Test that a real unweighted run respects the inequality within tolerance."""
        assert check_quotient_ode(perturbed_series) <= 0.02


class TestThresholdTime:
    """Tests for threshold times."""

    def test_synthetic_thresholds(self, make_series, gns_dp, small_grid):
        """Test t_star for relerr = 0.5 exp(-t)."""
        t = np.linspace(0.0, 5.0, 51)
        series = make_series(t, np.exp(-t), gns_dp, small_grid, relerr=0.5 * np.exp(-t))
        report = threshold_time(series, [0.2, 0.1, 0.05])
        assert report.t_star_empirical == pytest.approx([1.0, 1.7, 2.4])
        assert report.monotone
        assert report.a_fit is not None and report.a_fit > 0.0
        assert report.ghp is None

    def test_censored_epsilon(self, make_series, gns_dp, small_grid):
        """Test that an epsilon not reached before t_end is censored and left out of the fit."""
        t = np.linspace(0.0, 5.0, 51)
        series = make_series(t, np.exp(-t), gns_dp, small_grid, relerr=0.5 * np.exp(-t))
        report = threshold_time(series, [0.2, 1e-4])
        assert report.t_star_empirical[1] is None
        assert report.a_fit is None

    def test_bundle_takes_latest(self, make_series, gns_dp, small_grid):
        """Test that a bundle reports the latest member threshold."""
        t = np.linspace(0.0, 5.0, 51)
        fast = make_series(t, np.exp(-t), gns_dp, small_grid, relerr=0.5 * np.exp(-t))
        slow = make_series(t, np.exp(-t), gns_dp, small_grid, relerr=np.exp(-t))
        report = threshold_time([fast, slow], [0.2])
        assert report.t_star_empirical == pytest.approx([1.7])

    def test_epsilons_must_decrease(self, make_series, gns_dp, small_grid):
        """Test that unordered epsilons are rejected."""
        series = make_series(TIMES, np.exp(-TIMES), gns_dp, small_grid)
        with pytest.raises(ParameterError):
            threshold_time(series, [0.1, 0.2])

    def test_with_sandwich(self, perturbed_series):
        """Test that a real run reports thresholds and the sandwich constants."""
        report = threshold_time(perturbed_series, [0.1, 0.05], ghp_onset=0.0)
        assert report.ghp is not None
        assert report.ghp.straddles_one


class TestGhpSandwich:
    """Tests for the sandwich constants."""

    def test_stationary(self, stationary_series):
        """Test C_under = C_over = 1 for the steady state."""
        sandwich = ghp_sandwich(stationary_series)
        assert sandwich.C_under == pytest.approx(1.0, abs=1e-8)
        assert sandwich.C_over == pytest.approx(1.0, abs=1e-8)

    def test_onsets_narrow_the_sandwich(self, perturbed_series):
        """Test that later onsets give tighter constants."""
        early, late = ghp_onset_scan(perturbed_series, [0.0, 0.4])
        assert late.C_over <= early.C_over
        assert late.C_under >= early.C_under
        assert early.straddles_one

    def test_heavy_tail_unbounded(self, small_grid, gns_dp):
        """Test that growing tails report C_over = inf with the offending radius."""
        v0 = initial_data(HeavyTail(exponent=4.0), small_grid, gns_dp)
        series = evolve(v0, FlowConfig(grid=small_grid, dt=0.01, t_end=0.05), gns_dp)
        sandwich = ghp_sandwich(series)
        assert sandwich.C_over == math.inf
        assert sandwich.offending_radius is not None

    def test_onset_after_end(self, perturbed_series):
        """Test that an onset beyond the last row is rejected."""
        with pytest.raises(ParameterError):
            ghp_sandwich(perturbed_series, onset=10.0)

    def test_needs_snapshots(self, make_series, gns_dp, small_grid):
        """Test that rows alone are not enough."""
        with pytest.raises(ParameterError, match="snapshots"):
            ghp_sandwich(make_series(TIMES, np.exp(-TIMES), gns_dp, small_grid))


class TestRenyi:
    """Tests for the entropy power growth."""

    def test_barenblatt_equality(self, stationary_series):
        """Test that Barenblatt data grow exactly at the reference slope."""
        check = renyi_growth_check(stationary_series)
        assert check.violation <= 1e-6
        assert check.exponent == pytest.approx(1.5)
        assert check.slope > 0.0

    def test_needs_snapshots(self, make_series, gns_dp, small_grid):
        """Test that rows alone are not enough."""
        with pytest.raises(ParameterError):
            renyi_growth_check(make_series(TIMES, np.exp(-TIMES), gns_dp, small_grid))


class TestImprovedDecay:
    """Tests for decay from t = 0 and the improved inequality."""

    def test_vacuous_at_reference(self, stationary_series):
        """Test that F(0) = 0 gives a vacuous pass."""
        verdict = improved_rate_from_zero(stationary_series, 10.0)
        assert verdict.passed
        assert verdict.vacuous

    def test_perturbed_run(self, perturbed_series):
        """Test the baseline rate from t = 0 on a mass-matched run."""
        verdict = improved_rate_from_zero(perturbed_series, 10.0)
        assert verdict.rate == pytest.approx(4.0)
        assert verdict.passed
        assert verdict.margin >= 0.0

    def test_mass_mismatch_refused(self, make_series, gns_dp, small_grid):
        """Test that data of the wrong mass are refused."""
        series = make_series(TIMES, np.exp(-TIMES), gns_dp, small_grid)
        with pytest.raises(ExperimentRefusedError, match="mass"):
            improved_rate_from_zero(series, 10.0)

    def test_heavy_tail_refused(self, small_grid, gns_dp):
        """Test that data with a growing tail are refused."""
        v0 = initial_data(HeavyTail(exponent=4.0), small_grid, gns_dp)
        series = evolve(v0, FlowConfig(grid=small_grid, dt=0.01, t_end=0.02), gns_dp)
        with pytest.raises(ExperimentRefusedError, match="tail"):
            improved_rate_from_zero(series, 10.0)

    @pytest.mark.parametrize(("ratio", "mu", "expected"), [(10.0, 4.0, 0.0), (5.0, 4.0, 0.3), (5.0, 0.0, 0.0)])
    def test_improved_eep_check(self, make_series, gns_dp, small_grid, ratio, mu, expected):
        """Test the positive part of mu/(4+mu) I - (I - 4F) over I."""
        t = np.linspace(0.0, 1.0, 11)
        entropy = np.exp(-t)
        series = make_series(t, entropy, gns_dp, small_grid, fisher=ratio * entropy)
        assert improved_eep_check(series, mu) == pytest.approx(expected, abs=1e-12)

    def test_optimized_needs_snapshots(self, make_series, gns_dp, small_grid):
        """Test that the optimized entropy needs snapshots."""
        with pytest.raises(ParameterError):
            optimized_entropy_decay(make_series(TIMES, np.exp(-TIMES), gns_dp, small_grid), 0.4)
