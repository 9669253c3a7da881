"""
Observability for lab runs: structured logging, tracing and metrics.

- Structured logging (structlog)
- Tracing of solver stages (OpenTelemetry)
- Solver and command metrics (OpenTelemetry)
"""

from entropy_lab.observability.logging import bind_run_context, clear_run_context, get_logger, setup_logging
from entropy_lab.observability.metrics import CommandMetrics, SolverMetrics, get_meter, setup_metrics
from entropy_lab.observability.tracing import get_tracer, setup_tracing

__all__ = [
    "CommandMetrics",
    "SolverMetrics",
    "bind_run_context",
    "clear_run_context",
    "get_logger",
    "get_meter",
    "get_tracer",
    "setup_logging",
    "setup_metrics",
    "setup_observability",
    "setup_tracing",
]


def setup_observability(
    service_name: str = "ckn-entropy-lab",
    log_level: str = "info",
    otel_enabled: bool = False,
) -> None:
    """Set up all observability components.

    Args:
        service_name: Service name for traces and metrics
        log_level: Logging level (debug, info, warn, error, critical)
        otel_enabled: Whether to enable OpenTelemetry traces and metrics
    """
    setup_logging(log_level=log_level, otel_enabled=otel_enabled)
    setup_tracing(service_name=service_name, enabled=otel_enabled)
    setup_metrics(service_name=service_name, enabled=otel_enabled)
