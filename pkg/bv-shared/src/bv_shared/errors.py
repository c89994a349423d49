"""Error types raised by the codec packages."""


class CodecError(Exception):
    """Base class for every codec failure."""


class EmptyCloudError(CodecError, ValueError):
    """An operation received a cloud with no points."""


class LevelRangeError(CodecError, ValueError):
    """A level or coordinate lies outside the valid range."""


class DimensionMismatchError(CodecError, ValueError):
    """Array shapes disagree with the octree or with each other."""


class NumericalRankError(CodecError):
    """A Gram system stayed singular after rank reduction."""


class RankAccountingError(CodecError):
    """Wavelet dimensions do not add up to the refinement dimension."""


class BitstreamError(CodecError):
    """A container or entropy-coded payload could not be parsed."""


class MagicMismatchError(BitstreamError):
    """The container does not start with the expected magic bytes."""


class VersionMismatchError(BitstreamError):
    """The container was written by an unsupported format version."""


class SectionOverrunError(BitstreamError):
    """A section length points past the end of the container."""


class TruncatedStreamError(BitstreamError):
    """A payload ended before all symbols were decoded."""


class ChecksumError(BitstreamError):
    """A decoder ended in an inconsistent state."""


class DegenerateVolumeError(CodecError, ValueError):
    """A Bezier volume has no dominant axis (zero gradient)."""


class ModelError(CodecError, ValueError):
    """An entropy model cannot code the requested symbols."""


class UnknownCodecError(CodecError, KeyError):
    """No byte codec is registered under the given id or name."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown codec"


class PlyFormatError(CodecError):
    """A PLY file could not be read."""


class PlyHeaderError(PlyFormatError):
    """The PLY header is malformed."""


class PlyTruncatedError(PlyFormatError):
    """The PLY payload ends before the declared vertex count."""


class PlyPropertyError(PlyFormatError):
    """A PLY property is missing or has an unsupported type."""
