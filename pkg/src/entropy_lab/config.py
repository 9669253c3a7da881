"""
Configuration management using Pydantic Settings.

Process-level settings come from the environment (and an optional .env
file). A run itself is described by a RunConfig, read from a flat
``key = value`` file, from command-line flags or from the header echoed
into every output CSV.
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from entropy_lab.constants import CknParameters, DerivedParameters, derive
from entropy_lab.errors import ConfigError
from entropy_lab.flow import BackwardEulerNewton, Bump, Explicit, FlowConfig, HeavyTail, InitialData, PerturbedBarenblatt
from entropy_lab.profiles import RadialGrid, Spacing, make_grid


class RuntimeSettings(BaseSettings):
    """Logging and telemetry settings."""

    model_config = SettingsConfigDict(
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = Field(
        default="info",
        description="Logging level",
        pattern="^(debug|info|warn|warning|error|critical)$",
    )
    otel_enabled: bool = Field(
        default=False,
        description="Enable OpenTelemetry traces and metrics",
    )
    otel_service_name: str = Field(
        default="ckn-entropy-lab",
        description="OpenTelemetry service name",
    )


class LabSettings(BaseSettings):
    """Defaults shared by every command, overridable by global flags."""

    model_config = SettingsConfigDict(
        env_prefix="LAB_",
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    out_dir: Path = Field(
        default=Path("."),
        description="Directory for CSV artifacts and the sweep summary",
    )
    threads: int = Field(
        default=1,
        description="Concurrent trajectories in sweeps",
        ge=1,
        le=64,
    )
    seed: int = Field(
        default=0,
        description="Seed for random perturbations",
        ge=0,
    )
    tol: float = Field(
        default=5e-3,
        description="Relative tolerance for verdicts against closed forms",
        gt=0.0,
        lt=1.0,
    )


class Config:
    """Application configuration container."""

    def __init__(self) -> None:
        """Initialize configuration from environment variables."""
        self.runtime = RuntimeSettings()
        self.lab = LabSettings()

    def __repr__(self) -> str:
        return (
            f"Config(log_level={self.runtime.log_level}, otel_enabled={self.runtime.otel_enabled}, "
            f"out_dir={self.lab.out_dir}, threads={self.lab.threads})"
        )


class Range(BaseModel):
    """Inclusive scan range ``lo:hi:steps``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lo: float
    hi: float
    steps: int = Field(..., ge=2)

    @classmethod
    def parse(cls, text: str) -> Range:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be lo:hi:steps, got {text!r}")
        return cls(lo=float(parts[0]), hi=float(parts[1]), steps=int(parts[2]))

    def __str__(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.steps}"


def _is_range(text: str) -> bool:
    return text.count(":") == 2


class RunConfig(BaseModel):
    """Everything a command needs to reproduce a run; unknown keys are errors."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # parameters
    d: int = Field(default=4, ge=1, description="Space dimension")
    beta: float | Range = Field(default=0.0, description="Gradient weight exponent, or a scan range")
    gamma: float | Range = Field(default=0.0, description="Lebesgue weight exponent, or a scan range")
    m: float | None = Field(default=None, gt=0.0, lt=1.0, description="Diffusion exponent")
    p: float | Literal["critical"] | None = Field(default=None, description="Interpolation exponent, or 'critical' for p = p_star")
    # grid
    rmax: float = Field(default=20.0, gt=0.0, description="Outer radius of the artificial-frame grid")
    N: int = Field(default=256, ge=16, description="Number of cells")
    spacing: Spacing = Field(default=Spacing.UNIFORM, description="uniform or geometric")
    ratio: float | None = Field(default=None, gt=1.0, description="Geometric spacing ratio")
    # flow
    dt: float = Field(default=2e-3, gt=0.0, description="Time step")
    t_end: float = Field(default=2.0, gt=0.0, description="Final self-similar time")
    scheme: Literal["implicit", "explicit"] = Field(default="implicit")
    newton_tol: float = Field(default=1e-10, gt=0.0, le=1e-6)
    newton_max_iter: int = Field(default=50, ge=1)
    cfl_safety: float = Field(default=0.4, gt=0.0, le=1.0)
    record_every: int = Field(default=1, ge=1)
    # initial data
    init: Literal["barenblatt", "perturbed", "bump", "heavy_tail"] = Field(default="perturbed")
    mode: int = Field(default=0, ge=0)
    amplitude: float = Field(default=0.05, ge=0.0, lt=1.0)
    center: float = Field(default=0.0, ge=0.0)
    width: float = Field(default=1.0, gt=0.0)
    exponent: float = Field(default=8.0, gt=0.0)
    mass: float | None = Field(default=None, gt=0.0, description="Target weighted mass; default is the reference mass")
    # experiments
    l_max: int = Field(default=4, ge=2)
    window: tuple[float, float] | None = Field(default=None, description="Decay fit window lo:hi; default is the second half of the run")
    epsilons: tuple[float, ...] = Field(default=(0.2, 0.1, 0.05))
    onset: float = Field(default=0.0, ge=0.0)
    mu: float = Field(default=0.0, ge=0.0)
    runs: int = Field(default=5, ge=1)
    input: Path | None = Field(default=None, description="Input field CSV")
    output: Path | None = Field(
        default=None,
        description="Main output CSV, required by region; default is <out_dir>/<command>-<digest>.csv",
    )
    # global
    out_dir: Path | None = None
    seed: int | None = Field(default=None, ge=0)
    threads: int | None = Field(default=None, ge=1, le=64)
    tol: float | None = Field(default=None, gt=0.0, lt=1.0)

    @field_validator("beta", "gamma", mode="before")
    @classmethod
    def _scalar_or_range(cls, value: Any) -> Any:
        if isinstance(value, str) and _is_range(value):
            return Range.parse(value)
        return value

    @field_validator("window", mode="before")
    @classmethod
    def _window(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(float(item) for item in value.replace(":", ",").split(","))
        return value

    @field_validator("epsilons", mode="before")
    @classmethod
    def _float_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(float(item) for item in value.split(",") if item.strip())
        return value

    @field_validator("p", mode="before")
    @classmethod
    def _critical(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() == "critical":
            return "critical"
        return value

    @classmethod
    def from_mapping(cls, values: dict[str, Any]) -> RunConfig:
        """Validate a mapping of raw values.

        Raises:
            ConfigError: unknown keys or invalid values
        """
        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        try:
            return cls(**values)
        except ValidationError as e:
            details = "; ".join(f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in e.errors())
            raise ConfigError(f"invalid configuration: {details}") from e

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> RunConfig:
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        values: dict[str, str] = {}
        for number, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
            if key in values:
                raise ConfigError(f"line {number}: duplicate key {key!r}")
            values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path: Path) -> RunConfig:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read configuration {path}: {e}") from e
        return cls.from_lines(text.splitlines())

    def to_lines(self) -> list[str]:
        """``key = value`` lines of every set field; from_lines(to_lines()) reproduces the config."""
        lines = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if value is None:
                continue
            lines.append(f"{name} = {_format_value(value)}")
        return lines

    def merged(self, **overrides: Any) -> RunConfig:
        """Copy with non-None overrides applied and revalidated."""
        values = {name: getattr(self, name) for name in type(self).model_fields}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return type(self).from_mapping(values)

    def digest(self) -> str:
        """Short stable hash of the configuration, used to key sweep results."""
        return hashlib.sha256("\n".join(self.to_lines()).encode()).hexdigest()[:12]

    def params(self) -> CknParameters:
        """Problem parameters; needs scalar beta/gamma and one of m or p.

        Raises:
            ConfigError: ranges instead of scalars, both or neither of m and p, or inadmissible values
        """
        if isinstance(self.beta, Range) or isinstance(self.gamma, Range):
            raise ConfigError("beta and gamma must be scalars for this command")
        if (self.m is None) == (self.p is None):
            raise ConfigError("give exactly one of m or p")
        if self.p == "critical":
            raise ConfigError("p = critical is only meaningful for region scans")
        try:
            if self.m is not None:
                return CknParameters(d=self.d, beta=self.beta, gamma=self.gamma, m=self.m)
            return CknParameters.from_p(self.d, float(self.p), beta=self.beta, gamma=self.gamma)  # type: ignore[arg-type]
        except (ValidationError, ValueError) as e:
            raise ConfigError(f"invalid parameters: {e}") from e

    def derived(self) -> DerivedParameters:
        return derive(self.params())

    def grid(self, dp: DerivedParameters) -> RadialGrid:
        return make_grid(self.rmax, self.N, dp, spacing=self.spacing, ratio=self.ratio)

    def flow_config(self, grid: RadialGrid) -> FlowConfig:
        scheme: BackwardEulerNewton | Explicit
        if self.scheme == "implicit":
            scheme = BackwardEulerNewton(tol=self.newton_tol, max_iter=self.newton_max_iter)
        else:
            scheme = Explicit(cfl_safety=self.cfl_safety)
        return FlowConfig(grid=grid, dt=self.dt, t_end=self.t_end, scheme=scheme, record_every=self.record_every)

    def initial(self) -> InitialData | None:
        """Initial data description; None means the stationary profile itself."""
        match self.init:
            case "perturbed":
                return PerturbedBarenblatt(mode=self.mode, amplitude=self.amplitude)
            case "bump":
                return Bump(center=self.center, width=self.width)
            case "heavy_tail":
                return HeavyTail(exponent=self.exponent)
        return None


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format_value(item) for item in value)
    return str(value)
