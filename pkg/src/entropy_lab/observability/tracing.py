"""
OpenTelemetry tracing configuration.

Spans wrap the expensive stages of a run (trajectory integration,
eigenvalue solves, whole commands) so that their timing can be inspected.
"""

from __future__ import annotations

import sys
from typing import TYPE_CHECKING

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter

if TYPE_CHECKING:
    from opentelemetry.trace import Tracer


def setup_tracing(service_name: str = "ckn-entropy-lab", enabled: bool = False) -> None:
    """Configure OpenTelemetry tracing.

    Args:
        service_name: Service name recorded on every span
        enabled: Whether to install a tracer provider; when False the API no-op tracer stays active
    """
    if not enabled:
        return

    provider = TracerProvider(resource=Resource.create({"service.name": service_name}))
    # stderr: stdout carries command summaries
    provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)


def get_tracer(name: str) -> Tracer:
    """Get a tracer instance.

    Args:
        name: Tracer name (usually __name__)

    Returns:
        OpenTelemetry Tracer
    """
    return trace.get_tracer(name)
