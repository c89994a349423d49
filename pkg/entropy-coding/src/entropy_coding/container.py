"""Self-describing container shared by the geometry and attribute streams.

Layout, little-endian::

    magic (4 bytes) | version u8 | depth u8 | start level u8 | stepsize f64 |
    compressor id u8 | 5 × u32 section lengths | sections

Each section is passed through the byte codec named in the header; the
recorded lengths are the compressed ones.
"""

import struct
from dataclasses import dataclass

from bv_shared import (
    MagicMismatchError,
    SectionOverrunError,
    TruncatedStreamError,
    VersionMismatchError,
)

from .bytecodec import get_codec

CONTAINER_VERSION = 1
NUM_SECTIONS = 5
_FIXED = struct.Struct("<4sBBBdB")
_LENGTHS = struct.Struct("<" + "I" * NUM_SECTIONS)
HEADER_SIZE = _FIXED.size + _LENGTHS.size


@dataclass(frozen=True)
class ContainerHeader:
    magic: bytes
    depth: int
    start_level: int
    stepsize: float
    compressor_id: int
    version: int = CONTAINER_VERSION


def pack_container(header: ContainerHeader, sections: list[bytes]) -> bytes:
    """Compress the sections and prepend the header."""
    if len(sections) != NUM_SECTIONS:
        raise ValueError(
            f"container needs {NUM_SECTIONS} sections, got {len(sections)}"
        )
    codec = get_codec(header.compressor_id)
    compressed = [codec.compress(section) for section in sections]
    fixed = _FIXED.pack(
        header.magic,
        header.version,
        header.depth,
        header.start_level,
        header.stepsize,
        header.compressor_id,
    )
    return fixed + _LENGTHS.pack(*(len(c) for c in compressed)) + b"".join(compressed)


def unpack_container(
    data: bytes, magic: bytes
) -> tuple[ContainerHeader, list[bytes], list[int]]:
    """Parse and decompress a container.

    Returns:
        The header, the decompressed sections and their stored lengths

    Raises:
        TruncatedStreamError: If the header is incomplete
        MagicMismatchError: If the magic differs from ``magic``
        VersionMismatchError: If the version is not supported
        SectionOverrunError: If the sections do not fill the stream exactly
    """
    if len(data) < HEADER_SIZE:
        raise TruncatedStreamError(
            f"stream has {len(data)} bytes, header needs {HEADER_SIZE}"
        )
    found, version, depth, start_level, stepsize, compressor_id = _FIXED.unpack_from(
        data, 0
    )
    if found != magic:
        raise MagicMismatchError(f"expected magic {magic!r}, found {found!r}")
    if version != CONTAINER_VERSION:
        raise VersionMismatchError(
            f"container version {version}, this decoder reads {CONTAINER_VERSION}"
        )
    lengths = list(_LENGTHS.unpack_from(data, _FIXED.size))
    if HEADER_SIZE + sum(lengths) != len(data):
        raise SectionOverrunError(
            f"sections claim {sum(lengths)} bytes, stream carries "
            f"{len(data) - HEADER_SIZE}"
        )
    codec = get_codec(compressor_id)
    sections = []
    offset = HEADER_SIZE
    for length in lengths:
        sections.append(codec.decompress(data[offset : offset + length]))
        offset += length
    header = ContainerHeader(
        magic=found,
        depth=depth,
        start_level=start_level,
        stepsize=stepsize,
        compressor_id=compressor_id,
        version=version,
    )
    return header, sections, lengths


def section_lengths(data: bytes) -> list[int]:
    """Stored section lengths of a packed container, without decompressing."""
    if len(data) < HEADER_SIZE:
        raise TruncatedStreamError(
            f"stream has {len(data)} bytes, header needs {HEADER_SIZE}"
        )
    return list(_LENGTHS.unpack_from(data, _FIXED.size))
