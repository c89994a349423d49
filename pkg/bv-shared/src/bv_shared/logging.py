"""Structured logging shared by the codec packages.

Records are rendered by structlog and written to standard error, so the
``bvpc`` summaries on standard output stay machine-readable. ``LOG_LEVEL``
picks the level and ``LOG_FORMAT=json`` (the default) the JSON renderer;
any other format gets the console renderer.
"""

import logging
import os
import sys
import time
from contextlib import contextmanager
from typing import Any, Iterator, MutableMapping, Protocol

import structlog

LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}

# Significant digits kept for float context such as PSNR or bits per voxel.
FLOAT_DIGITS = 6


class StructuredLogger(Protocol):
    """A structlog logger: event text plus arbitrary keyword context.

    Lets mypy accept keyword context at every call site without
    ``type: ignore`` comments.
    """

    def debug(self, event: str, **kwargs: Any) -> None: ...

    def info(self, event: str, **kwargs: Any) -> None: ...

    def warning(self, event: str, **kwargs: Any) -> None: ...

    def error(self, event: str, **kwargs: Any) -> None: ...

    def critical(self, event: str, **kwargs: Any) -> None: ...

    def exception(self, event: str, **kwargs: Any) -> None: ...

    def bind(self, **kwargs: Any) -> "StructuredLogger": ...


def _round_floats(
    logger: Any, method_name: str, event_dict: MutableMapping[str, Any]
) -> MutableMapping[str, Any]:
    for key, value in event_dict.items():
        if isinstance(value, float):
            event_dict[key] = float(f"{value:.{FLOAT_DIGITS}g}")
    return event_dict


class LoggingConfig:
    """Logging options of one package, read from the environment."""

    def __init__(self, package: str = "bvpc"):
        self.package = package
        self.log_level = LEVELS.get(
            os.getenv("LOG_LEVEL", "INFO").strip().upper(), logging.INFO
        )
        self.enable_debug = self.log_level == logging.DEBUG
        self.enable_json = os.getenv("LOG_FORMAT", "json").strip().lower() == "json"

    def processors(self) -> list[Any]:
        renderer: Any = (
            structlog.processors.JSONRenderer(sort_keys=True)
            if self.enable_json
            else structlog.dev.ConsoleRenderer(colors=False)
        )
        return [
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            _round_floats,
            renderer,
        ]

    def apply(self) -> None:
        """Route stdlib logging to stderr and install the structlog chain."""
        logging.basicConfig(
            level=self.log_level, format="%(message)s", stream=sys.stderr
        )
        logging.getLogger().setLevel(self.log_level)
        structlog.configure(
            processors=self.processors(),
            context_class=dict,
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=True,
        )


def configure_logging(package: str = "bvpc") -> StructuredLogger:
    """Configure logging from the environment and return a package logger.

    Every module calls this once at import time:
    ``logger = configure_logging("geometry-codec")``.
    """
    LoggingConfig(package).apply()
    return get_logger(package)


def get_logger(package: str) -> StructuredLogger:
    """Logger bound to ``package``, without touching the configuration."""
    logger = structlog.get_logger().bind(package=package)
    return logger  # type: ignore[no-any-return]


def log_error(logger: StructuredLogger, error: Exception, **context: Any) -> None:
    logger.error(
        "Error occurred", error=str(error), error_type=type(error).__name__, **context
    )


def log_stage(logger: StructuredLogger, stage: str, **context: Any) -> None:
    """Debug record of one step of an encoder or decoder."""
    logger.debug("Pipeline stage", stage=stage, **context)


def log_rate(
    logger: StructuredLogger, artifact: str, num_bytes: int, **context: Any
) -> None:
    """Size of an encoded stream, in bytes and bits."""
    logger.info(
        "Artifact encoded",
        artifact=artifact,
        bytes=num_bytes,
        bits=8 * num_bytes,
        **context,
    )


@contextmanager
def log_duration(
    logger: StructuredLogger, stage: str, **context: Any
) -> Iterator[None]:
    """Debug record of the wall time spent in the enclosed block."""
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.debug(
            "Stage finished",
            stage=stage,
            seconds=time.perf_counter() - start,
            **context,
        )
