"""Shared logging, settings and error types for the point cloud codec."""

__version__ = "0.1.0"

# Export settings
from .config import CodecSettings, get_settings

# Export error types
from .errors import (
    BitstreamError,
    ChecksumError,
    CodecError,
    DegenerateVolumeError,
    DimensionMismatchError,
    EmptyCloudError,
    LevelRangeError,
    MagicMismatchError,
    ModelError,
    NumericalRankError,
    PlyFormatError,
    PlyHeaderError,
    PlyPropertyError,
    PlyTruncatedError,
    RankAccountingError,
    SectionOverrunError,
    TruncatedStreamError,
    UnknownCodecError,
    VersionMismatchError,
)

# Export logging utilities
from .logging import (
    LoggingConfig,
    StructuredLogger,
    configure_logging,
    get_logger,
    log_duration,
    log_error,
    log_rate,
    log_stage,
)

__all__ = [
    # Settings
    "CodecSettings",
    "get_settings",
    # Errors
    "BitstreamError",
    "ChecksumError",
    "CodecError",
    "DegenerateVolumeError",
    "DimensionMismatchError",
    "EmptyCloudError",
    "LevelRangeError",
    "MagicMismatchError",
    "ModelError",
    "NumericalRankError",
    "PlyFormatError",
    "PlyHeaderError",
    "PlyPropertyError",
    "PlyTruncatedError",
    "RankAccountingError",
    "SectionOverrunError",
    "TruncatedStreamError",
    "UnknownCodecError",
    "VersionMismatchError",
    # Logging
    "LoggingConfig",
    "StructuredLogger",
    "configure_logging",
    "get_logger",
    "log_duration",
    "log_error",
    "log_rate",
    "log_stage",
]
