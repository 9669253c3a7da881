"""
Command registry for the lab.

Commands are async functions registered with ``@lab.command()``. They take
a RunConfig and the effective LabSettings and return a result dict:
``{"error": True, "error_message": ..., "exit_code": 2}`` on usage errors,
``{"passed": False, ...}`` when a verdict fails, anything else on success.
"""

from __future__ import annotations

import asyncio
import time
from collections.abc import Awaitable, Callable
from dataclasses import dataclass
from typing import Any

from pydantic import ValidationError

from entropy_lab.config import Config, LabSettings, RunConfig
from entropy_lab.errors import ConfigError, ExperimentRefusedError, LabError, ParameterError
from entropy_lab.observability import (
    CommandMetrics,
    bind_run_context,
    clear_run_context,
    get_logger,
    get_meter,
    get_tracer,
    setup_observability,
)
from entropy_lab.serialization import append_summary

logger = get_logger(__name__)
tracer = get_tracer(__name__)

CommandFunc = Callable[[RunConfig, LabSettings], Awaitable[dict[str, Any]]]

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class CommandSpec:
    name: str
    func: CommandFunc
    help: str


def error_result(message: str, exit_code: int = EXIT_USAGE) -> dict[str, Any]:
    return {"error": True, "error_message": message, "exit_code": exit_code}


def exit_code_for(result: dict[str, Any]) -> int:
    """0 on success, 1 on a failed verdict, the carried code on errors."""
    if result.get("error"):
        return int(result.get("exit_code", EXIT_USAGE))
    if result.get("passed") is False:
        return EXIT_VERDICT
    return EXIT_OK


class LabApp:
    """Registry and runner of lab commands."""

    def __init__(self, config: Config) -> None:
        self.config = config
        self.commands: dict[str, CommandSpec] = {}
        self.metrics = CommandMetrics(get_meter(__name__))

    def command(self, name: str | None = None) -> Callable[[CommandFunc], CommandFunc]:
        """Register an async command; the help text is the first docstring line."""

        def register(func: CommandFunc) -> CommandFunc:
            command_name = name or func.__name__
            doc = (func.__doc__ or "").strip().splitlines()
            self.commands[command_name] = CommandSpec(name=command_name, func=func, help=doc[0] if doc else "")
            return func

        return register

    def settings_for(self, run: RunConfig) -> LabSettings:
        """Environment settings with the run's global overrides applied."""
        overrides = {key: getattr(run, key) for key in ("out_dir", "threads", "seed", "tol") if getattr(run, key) is not None}
        return self.config.lab.model_copy(update=overrides)

    async def run(self, name: str, run: RunConfig) -> dict[str, Any]:
        """Run a registered command and convert library errors into result dicts."""
        spec = self.commands.get(name)
        if spec is None:
            return error_result(f"unknown command {name!r}; available: {', '.join(sorted(self.commands))}")

        settings = self.settings_for(run)
        bind_run_context(command=name, config_digest=run.digest())
        start = time.perf_counter()
        with tracer.start_as_current_span(f"command.{name}") as span:
            try:
                result = await spec.func(run, settings)
            except (ConfigError, ParameterError, ExperimentRefusedError, ValidationError) as e:
                logger.warning("command_rejected", error=str(e), error_type=type(e).__name__)
                self.metrics.record_error(name, type(e).__name__)
                result = error_result(str(e), EXIT_USAGE)
            except LabError as e:
                logger.error("command_failed", error=str(e), error_type=type(e).__name__, exc_info=True)
                self.metrics.record_error(name, type(e).__name__)
                result = error_result(str(e), EXIT_VERDICT)
            finally:
                duration_ms = (time.perf_counter() - start) * 1000.0
                self.metrics.record_duration(name, duration_ms)
                clear_run_context()

            code = exit_code_for(result)
            status = "success" if code == EXIT_OK else "verdict_failed" if code == EXIT_VERDICT and not result.get("error") else "error"
            span.set_attribute("command.exit_code", code)
            self.metrics.record_call(name, status)

        if not result.get("error"):
            append_summary(settings.out_dir, name, run.digest(), result)

        logger.info("command_completed", command=name, exit_code=code, duration_ms=round(duration_ms, 1))
        return result

    def run_sync(self, name: str, run: RunConfig) -> dict[str, Any]:
        return asyncio.run(self.run(name, run))


def create_app(config: Config) -> LabApp:
    """Create the command registry and configure observability.

    Args:
        config: Application configuration

    Returns:
        Configured LabApp instance
    """
    setup_observability(
        service_name=config.runtime.otel_service_name,
        log_level=config.runtime.log_level,
        otel_enabled=config.runtime.otel_enabled,
    )
    logger.debug("creating_lab_app", log_level=config.runtime.log_level, otel_enabled=config.runtime.otel_enabled)
    return LabApp(config)


# Global app instance (commands register here)
lab = create_app(Config())


async def gather_limited(calls: list[Callable[[], Any]], threads: int) -> list[Any]:
    """Run blocking callables in worker threads, at most ``threads`` at a time, preserving order."""
    semaphore = asyncio.Semaphore(threads)

    async def bounded(call: Callable[[], Any]) -> Any:
        async with semaphore:
            return await asyncio.to_thread(call)

    return list(await asyncio.gather(*(bounded(call) for call in calls)))
