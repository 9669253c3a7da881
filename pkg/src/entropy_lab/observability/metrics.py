"""
OpenTelemetry metrics configuration.

Counters for solver work (time steps, Newton iterations, failures) and
per-command call/duration/error instruments.
"""

from __future__ import annotations

import sys
from typing import TYPE_CHECKING

from opentelemetry import metrics
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import ConsoleMetricExporter, PeriodicExportingMetricReader
from opentelemetry.sdk.resources import Resource

if TYPE_CHECKING:
    from opentelemetry.metrics import Counter, Histogram, Meter


def setup_metrics(service_name: str = "ckn-entropy-lab", enabled: bool = False) -> None:
    """Configure OpenTelemetry metrics.

    Args:
        service_name: Service name for metrics
        enabled: Whether to enable metrics
    """
    if not enabled:
        return

    reader = PeriodicExportingMetricReader(ConsoleMetricExporter(out=sys.stderr))
    provider = MeterProvider(resource=Resource.create({"service.name": service_name}), metric_readers=[reader])
    metrics.set_meter_provider(provider)


def get_meter(name: str) -> Meter:
    """Get a meter instance.

    Args:
        name: Meter name (usually __name__)

    Returns:
        OpenTelemetry Meter
    """
    return metrics.get_meter(name)


class SolverMetrics:
    """Work counters of the flow solver."""

    def __init__(self, meter: Meter) -> None:
        """Initialize solver metrics.

        Args:
            meter: OpenTelemetry Meter instance
        """
        self.steps: Counter = meter.create_counter(
            name="solver.steps",
            description="Accepted time steps",
            unit="1",
        )
        self.newton_iterations: Counter = meter.create_counter(
            name="solver.newton_iterations",
            description="Newton iterations spent in implicit steps",
            unit="1",
        )
        self.failures: Counter = meter.create_counter(
            name="solver.failures",
            description="Rejected steps (Newton divergence, negative densities)",
            unit="1",
        )

    def record_step(self, scheme: str, newton_iters: int = 0) -> None:
        """Record one accepted step and the Newton iterations it took."""
        self.steps.add(1, {"scheme": scheme})
        if newton_iters:
            self.newton_iterations.add(newton_iters, {"scheme": scheme})

    def record_failure(self, scheme: str, error_type: str) -> None:
        """Record a rejected step."""
        self.failures.add(1, {"scheme": scheme, "error_type": error_type})


class CommandMetrics:
    """Command call metrics tracking."""

    def __init__(self, meter: Meter) -> None:
        """Initialize command metrics.

        Args:
            meter: OpenTelemetry Meter instance
        """
        self.calls: Counter = meter.create_counter(
            name="command.calls",
            description="Total number of command runs",
            unit="1",
        )
        self.duration: Histogram = meter.create_histogram(
            name="command.duration",
            description="Command wall-clock duration",
            unit="ms",
        )
        self.errors: Counter = meter.create_counter(
            name="command.errors",
            description="Total number of command errors",
            unit="1",
        )

    def record_call(self, command: str, status: str = "success") -> None:
        """Record a command run.

        Args:
            command: Name of the command
            status: Outcome (success, verdict_failed, error)
        """
        self.calls.add(1, {"command": command, "status": status})

    def record_duration(self, command: str, duration_ms: float) -> None:
        """Record command duration."""
        self.duration.record(duration_ms, {"command": command})

    def record_error(self, command: str, error_type: str) -> None:
        """Record a command error."""
        self.errors.add(1, {"command": command, "error_type": error_type})
