"""
qkdlink Structured Logger

Standardized logging for experiment runs and key-exchange sessions.
Supports JSON output for log pipelines and colorized output for development.
"""
import logging
import os
import sys

import structlog


def setup_logger(name: str = "qkdlink"):
    """
    Configure structlog for the whole package.

    Toggle the renderer via QKD_LOG_FORMAT ("text" or "json") and the
    threshold via QKD_LOG_LEVEL. Output goes to stderr so that CSV written
    to stdout by the CLI stays machine-readable.
    """
    log_format = os.getenv("QKD_LOG_FORMAT", "text").lower()
    log_level = os.getenv("QKD_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(log_level)
    if not isinstance(level, int):
        level = logging.INFO

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if log_format == "json":
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )

    return structlog.get_logger(name)


# Default logger instance
logger = setup_logger()
