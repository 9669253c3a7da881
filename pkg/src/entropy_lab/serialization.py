"""
CSV artifacts.

Every file starts with comment lines: ``# key = value`` echoes the
RunConfig (re-parsable with RunConfig.from_lines) and ``## key = value``
carries grid and parameter metadata. Floats are written with repr, the
shortest decimal that round-trips.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from filelock import FileLock

from entropy_lab.config import RunConfig
from entropy_lab.constants import CknParameters, derive
from entropy_lab.errors import ConfigError
from entropy_lab.flow import FlowSeries
from entropy_lab.functionals import REPORT_COLUMNS, EntropyReport
from entropy_lab.observability import get_logger
from entropy_lab.profiles import RadialField, grid_from_metadata

logger = get_logger(__name__)

CONFIG_PREFIX = "# "
META_PREFIX = "## "
SUMMARY_FILE = "summary.txt"


def format_number(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _parse_number(text: str) -> float:
    return float(text) if text else math.nan


def _header(config: RunConfig | None, meta: dict[str, Any] | None) -> list[str]:
    lines = [CONFIG_PREFIX + line for line in config.to_lines()] if config is not None else []
    lines += [f"{META_PREFIX}{key} = {format_number(value)}" for key, value in (meta or {}).items()]
    return lines


def write_table(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: RunConfig | None = None,
    meta: dict[str, Any] | None = None,
) -> Path:
    """Write a CSV with the comment header, a column row and one line per row."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        for line in _header(config, meta):
            handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(value) for value in row])
    logger.debug("table_written", path=str(path), columns=list(columns))
    return path


def read_table(path: Path) -> tuple[list[str], list[list[str]], list[str], dict[str, str]]:
    """Read a CSV written by write_table.

    Returns:
        (columns, rows, config lines, metadata)
    """
    config_lines: list[str] = []
    meta: dict[str, str] = {}
    body: list[str] = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if line.startswith(META_PREFIX):
                key, _, value = line[len(META_PREFIX) :].partition("=")
                meta[key.strip()] = value.strip()
            elif line.startswith("#"):
                config_lines.append(line[1:].strip())
            else:
                body.append(line)
    reader = csv.reader(body)
    try:
        columns = next(reader)
    except StopIteration as e:
        raise ConfigError(f"{path} has no column row") from e
    return columns, [row for row in reader if row], config_lines, meta


def read_config_header(path: Path) -> RunConfig:
    """Re-parse the RunConfig echoed into an output file."""
    return RunConfig.from_lines(read_table(path)[2])


def write_field(path: Path, field: RadialField, config: RunConfig | None = None) -> Path:
    """Two-column (r, value) CSV with grid metadata."""
    return write_table(path, ("r", "value"), zip(field.grid.nodes, field.values, strict=True), config, field.grid.metadata())


def read_field(path: Path) -> RadialField:
    columns, rows, _, meta = read_table(path)
    if columns[:2] != ["r", "value"]:
        raise ConfigError(f"{path} is not a field file (columns {columns})")
    grid = grid_from_metadata(meta)
    values = np.array([float(row[1]) for row in rows])
    return RadialField(grid, values)


def _series_meta(series: FlowSeries) -> dict[str, Any]:
    dp = series.params
    return {"d": dp.d, "beta": dp.beta, "gamma": dp.gamma, "m": dp.m} | series.grid.metadata() | {
        f"flow.{key}": value for key, value in series.config.items() if key not in series.grid.metadata()
    }


def write_series(path: Path, series: FlowSeries, config: RunConfig | None = None) -> Path:
    """EntropyReport rows in REPORT_COLUMNS order."""
    return write_table(path, REPORT_COLUMNS, (row.as_row() for row in series.rows), config, _series_meta(series))


def write_snapshots(path: Path, series: FlowSeries, config: RunConfig | None = None) -> Path:
    """Wide CSV: column r, then v at every recorded time."""
    if series.snapshots is None:
        raise ConfigError("series has no snapshots to write")
    columns = ["r"] + [format_number(t) for t in series.times]
    matrix = np.column_stack([series.grid.nodes, *series.snapshots])
    return write_table(path, columns, matrix.tolist(), config, _series_meta(series))


def read_series(path: Path, snapshots_path: Path | None = None) -> FlowSeries:
    """Rebuild a FlowSeries (and its snapshots when given) from CSV."""
    columns, rows, _, meta = read_table(path)
    if tuple(columns) != REPORT_COLUMNS:
        raise ConfigError(f"{path} is not a series file (columns {columns})")
    reports = [EntropyReport(**{name: _parse_number(value) for name, value in zip(columns, row, strict=True)}) for row in rows]

    params = CknParameters(d=int(meta["d"]), beta=float(meta["beta"]), gamma=float(meta["gamma"]), m=float(meta["m"]))
    grid = grid_from_metadata(meta)
    flow_meta = {key.removeprefix("flow."): value for key, value in meta.items() if key.startswith("flow.")}

    snapshots = None
    if snapshots_path is not None:
        _, snap_rows, _, _ = read_table(snapshots_path)
        matrix = np.array([[float(value) for value in row] for row in snap_rows])
        snapshots = [matrix[:, k] for k in range(1, matrix.shape[1])]
    return FlowSeries(rows=reports, grid=grid, params=derive(params), config=flow_meta, snapshots=snapshots)


def format_summary(result: dict[str, Any]) -> list[str]:
    """``key = value`` lines for a command result; nested mappings use dotted keys."""
    lines: list[str] = []

    def emit(prefix: str, value: Any) -> None:
        if isinstance(value, dict):
            for key, item in value.items():
                emit(f"{prefix}.{key}" if prefix else str(key), item)
        elif isinstance(value, list | tuple):
            lines.append(f"{prefix} = {','.join(format_number(item) for item in value)}")
        else:
            lines.append(f"{prefix} = {format_number(value)}")

    emit("", result)
    return lines


def append_summary(out_dir: Path, command: str, key: str, result: dict[str, Any]) -> Path:
    """Append a keyed block to the sweep summary under a file lock."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / SUMMARY_FILE
    block = [f"[{command} {key}]", *format_summary(result), ""]
    with FileLock(str(path) + ".lock"):
        with path.open("a", encoding="utf-8") as handle:
            handle.write("\n".join(block) + "\n")
    return path
