"""General-purpose byte compressors applied to container sections."""

import bz2
import lzma
import zlib
from abc import ABC, abstractmethod

from bv_shared import BitstreamError, UnknownCodecError


class ByteCodec(ABC):
    """Base class for section compressors.

    Subclasses set a stable ``codec_id`` that is written into container headers
    and a ``name`` used in settings and on the command line.
    """

    codec_id: int
    name: str

    @abstractmethod
    def compress(self, data: bytes) -> bytes:
        """Compress a section payload."""

    @abstractmethod
    def decompress(self, data: bytes) -> bytes:
        """Restore a payload produced by :meth:`compress`."""


class IdentityCodec(ByteCodec):
    codec_id = 0
    name = "none"

    def compress(self, data: bytes) -> bytes:
        return bytes(data)

    def decompress(self, data: bytes) -> bytes:
        return bytes(data)


class ZlibCodec(ByteCodec):
    codec_id = 1
    name = "zlib"

    def compress(self, data: bytes) -> bytes:
        return zlib.compress(data, 9)

    def decompress(self, data: bytes) -> bytes:
        try:
            return zlib.decompress(data)
        except zlib.error as exc:
            raise BitstreamError(f"zlib section is corrupt: {exc}") from exc


class LzmaCodec(ByteCodec):
    codec_id = 2
    name = "lzma"

    def compress(self, data: bytes) -> bytes:
        return lzma.compress(data, format=lzma.FORMAT_ALONE, preset=9)

    def decompress(self, data: bytes) -> bytes:
        try:
            return lzma.decompress(data, format=lzma.FORMAT_ALONE)
        except lzma.LZMAError as exc:
            raise BitstreamError(f"lzma section is corrupt: {exc}") from exc


class Bz2Codec(ByteCodec):
    codec_id = 3
    name = "bz2"

    def compress(self, data: bytes) -> bytes:
        return bz2.compress(data, 9)

    def decompress(self, data: bytes) -> bytes:
        try:
            return bz2.decompress(data)
        except (OSError, ValueError) as exc:
            raise BitstreamError(f"bz2 section is corrupt: {exc}") from exc


_REGISTRY: dict[int, ByteCodec] = {
    codec.codec_id: codec
    for codec in (IdentityCodec(), ZlibCodec(), LzmaCodec(), Bz2Codec())
}
_ALIASES = {"identity": 0, "raw": 0}


def get_codec(key: int | str) -> ByteCodec:
    """Look up a codec by header id or by name.

    Raises:
        UnknownCodecError: If nothing is registered under ``key``
    """
    if isinstance(key, str):
        return _REGISTRY[codec_id_for(key)]
    try:
        return _REGISTRY[key]
    except KeyError:
        raise UnknownCodecError(f"unknown byte codec id {key}") from None


def codec_id_for(name: str) -> int:
    lowered = name.lower()
    if lowered in _ALIASES:
        return _ALIASES[lowered]
    for codec in _REGISTRY.values():
        if codec.name == lowered:
            return codec.codec_id
    known = ", ".join(sorted(c.name for c in _REGISTRY.values()))
    raise UnknownCodecError(f"unknown byte codec '{name}' (known: {known})")


def available_codecs() -> list[str]:
    return [codec.name for codec in _REGISTRY.values()]


def byte_compress(data: bytes, codec: int | str) -> bytes:
    return get_codec(codec).compress(data)


def byte_decompress(data: bytes, codec: int | str) -> bytes:
    return get_codec(codec).decompress(data)
