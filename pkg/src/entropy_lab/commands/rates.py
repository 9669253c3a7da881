"""
Decay-rate fit of the relative entropy against the spectral predictions.

The trajectory and the Hardy-Poincare gap are computed concurrently. The
fitted slope is compared with the baseline and improved rates built from the
closed-form gap, and with the linearized rate of the numeric radial gap.
"""

import asyncio
from typing import Any

from entropy_lab.app import lab
from entropy_lab.commands._common import output_path, run_trajectory
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.constants import zeta_ckn
from entropy_lab.errors import ExperimentRefusedError
from entropy_lab.experiments import fit_decay_rate, improved_eep_check, improved_rate_from_zero, optimized_entropy_decay
from entropy_lab.observability import get_logger
from entropy_lab.serialization import write_series, write_table
from entropy_lab.spectrum import hardy_poincare_gap

logger = get_logger(__name__)

RATE_COLUMNS = (
    "window_lo",
    "window_hi",
    "slope",
    "r_squared",
    "rows_used",
    "baseline",
    "improved",
    "linearized",
    "linearized_reference",
    "Lambda",
    "radial_gap",
)


@lab.command()
async def rates(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Fit the entropy decay rate and compare it with the baseline/improved/linearized predictions.

    Returns:
        Dict with:
        - slope, r_squared, window: the fit
        - predictions: baseline, improved and linearized rates
        - verdicts: baseline_ok, improved_ok, linearized_ok
        - evidence: improved rate from t = 0 (and the mu-dependent checks when mu > 0)
        - passed: all fitted verdicts hold
    """
    dp = run.derived()
    grid = run.grid(dp)
    series, spectral = await asyncio.gather(
        asyncio.to_thread(run_trajectory, run, dp, grid),
        asyncio.to_thread(hardy_poincare_gap, dp, grid, run.l_max),
    )

    fit = fit_decay_rate(series, run.window, gap=spectral.closed_form, radial_gap=spectral.radial_gap)
    baseline, improved, linearized = fit.predictions or (None, None, None)

    evidence: dict[str, Any] = {}
    try:
        verdict = improved_rate_from_zero(series, spectral.closed_form)
        evidence["from_zero"] = {"holds": verdict.passed, "margin": verdict.margin, "rate": verdict.rate}
    except ExperimentRefusedError as e:
        logger.info("improved_rate_from_zero_skipped", reason=str(e))
        evidence["from_zero"] = {"skipped": str(e)}
    if run.mu > 0.0:
        optimized = optimized_entropy_decay(series, zeta_ckn(dp, spectral.closed_form))
        evidence["improved_eep_violation"] = improved_eep_check(series, run.mu)
        evidence["optimized_entropy"] = {"holds": optimized.passed, "margin": optimized.margin}

    series_path = write_series(output_path(run, settings, "rates", "-series"), series, run)
    path = write_table(
        output_path(run, settings, "rates"),
        RATE_COLUMNS,
        [
            (
                *fit.window,
                fit.slope,
                fit.r_squared,
                fit.rows_used,
                baseline,
                improved,
                linearized,
                fit.linearized_reference,
                spectral.closed_form,
                spectral.radial_gap,
            )
        ],
        run,
        grid.metadata(),
    )
    return {
        "slope": fit.slope,
        "r_squared": fit.r_squared,
        "window": list(fit.window),
        "predictions": {"baseline": baseline, "improved": improved, "linearized": linearized},
        "linearized_reference": fit.linearized_reference,
        "verdicts": {"baseline_ok": fit.baseline_ok, "improved_ok": fit.improved_ok, "linearized_ok": fit.linearized_ok},
        "evidence": evidence,
        "passed": fit.passed,
        "output": str(path),
        "series": str(series_path),
    }
