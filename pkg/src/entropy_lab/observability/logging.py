"""
Structured logging for the lab.

Events are JSON lines on stderr; stdout carries only the ``key = value``
summary of a command. Solver events are frequently emitted with numpy
scalars and arrays, which are converted to plain JSON values here.
"""

from __future__ import annotations

import logging
import sys
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog

if TYPE_CHECKING:
    from structlog.types import EventDict, Processor

LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

# arrays longer than this are logged as a shape/range digest
MAX_LOGGED_ARRAY = 8


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        if value.size <= MAX_LOGGED_ARRAY:
            return value.tolist()
        return {"shape": list(value.shape), "min": float(np.min(value)), "max": float(np.max(value))}
    if isinstance(value, tuple | list):
        return [_plain(item) for item in value]
    return value


def numpy_to_builtin(logger: logging.Logger, method_name: str, event_dict: EventDict) -> EventDict:
    """Replace numpy scalars and arrays in an event by JSON-serializable values."""
    return {key: _plain(value) for key, value in event_dict.items()}


def add_log_level(logger: logging.Logger, method_name: str, event_dict: EventDict) -> EventDict:
    event_dict["level"] = method_name.upper()
    return event_dict


def add_otel_context(logger: logging.Logger, method_name: str, event_dict: EventDict) -> EventDict:
    """Attach the ids of the active span (command or solver) to the event."""
    from opentelemetry import trace

    span = trace.get_current_span()
    if span and span.is_recording():
        ctx = span.get_span_context()
        event_dict["trace_id"] = format(ctx.trace_id, "032x")
        event_dict["span_id"] = format(ctx.span_id, "016x")
    return event_dict


def setup_logging(log_level: str = "info", otel_enabled: bool = False) -> None:
    """Configure structlog and the stdlib root logger.

    Args:
        log_level: debug, info, warn(ing), error or critical; unknown names mean info
        otel_enabled: Whether events carry trace and span ids
    """
    level = LEVELS.get(log_level.lower(), logging.INFO)
    # force: run_cli may reconfigure after --log-level/--debug
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        numpy_to_builtin,
    ]
    if otel_enabled:
        processors.append(add_otel_context)
    processors.append(structlog.processors.JSONRenderer())

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def bind_run_context(**values: Any) -> None:
    """Bind values (command name, config digest) to every later event of this context."""
    structlog.contextvars.bind_contextvars(**values)


def clear_run_context() -> None:
    structlog.contextvars.clear_contextvars()


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a logger named after the calling module."""
    return structlog.get_logger(name)
