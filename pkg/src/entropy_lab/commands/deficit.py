"""
GNS deficit and the stability lower bound of a radial function.

The function is read from --input (a field CSV on an unweighted grid) or,
without input, is the optimizer g sampled on the configured grid.
"""

from typing import Any

from entropy_lab.app import error_result, lab
from entropy_lab.commands._common import output_path
from entropy_lab.config import LabSettings, RunConfig
from entropy_lab.constants import stability_constant
from entropy_lab.functionals import aubin_talenti_values, deficit_spec, gns_deficit_parts, stability_rhs
from entropy_lab.observability import get_logger
from entropy_lab.profiles import RadialField
from entropy_lab.serialization import read_field, write_table

logger = get_logger(__name__)

DEFICIT_COLUMNS = (
    "d",
    "p",
    "deficit",
    "relative_deficit",
    "stability_rhs",
    "scaled_deficit",
    "stability_bound",
    "K_gns",
    "K_closed",
    "C_gns",
)


@lab.command()
async def deficit(run: RunConfig, settings: LabSettings) -> dict[str, Any]:
    """Evaluate the GNS deficit of --input (default: the optimizer g) and the stability bound (exit 1 if deficit < 0)."""
    dp = run.derived()
    if run.input is not None:
        if not run.input.is_file():
            return error_result(f"input file {run.input} does not exist")
        f = read_field(run.input)
    else:
        grid = run.grid(dp)
        f = RadialField(grid, aubin_talenti_values(grid, dp.p))

    spec = deficit_spec(dp.d, dp.p, f.grid)
    positive, value = gns_deficit_parts(f, spec)
    relative = value / positive if positive > 0.0 else 0.0
    rhs = stability_rhs(f, spec)
    scaled = (dp.p + 1.0) / (dp.p - 1.0) * value
    bound = stability_constant(run.mu) * rhs if run.mu > 0.0 else None

    path = write_table(
        output_path(run, settings, "deficit"),
        DEFICIT_COLUMNS,
        [(dp.d, dp.p, value, relative, rhs, scaled, bound, spec.K_gns, spec.K_closed, spec.C_gns)],
        run,
        f.grid.metadata(),
    )
    logger.info("deficit_evaluated", deficit=value, relative=relative, stability_rhs=rhs)
    result: dict[str, Any] = {
        "deficit": value,
        "relative_deficit": relative,
        "stability_rhs": rhs,
        "K_gns": spec.K_gns,
        "K_closed": spec.K_closed,
        "C_gns": spec.C_gns,
        "passed": relative >= -settings.tol,
        "output": str(path),
    }
    if bound is not None:
        result["stability"] = {"scaled_deficit": scaled, "bound": bound, "holds": scaled >= bound}
    return result
