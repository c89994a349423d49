"""Scalar quantization, entropy coders and container byte codecs."""

__version__ = "0.1.0"

from .bitio import BitReader, BitWriter
from .bytecodec import (
    ByteCodec,
    available_codecs,
    byte_compress,
    byte_decompress,
    codec_id_for,
    get_codec,
)
from .container import (
    CONTAINER_VERSION,
    HEADER_SIZE,
    ContainerHeader,
    pack_container,
    section_lengths,
    unpack_container,
)
from .quantizer import QuantizerSpec, dequantize, quantize
from .rans import (
    ALPHABET_LIMIT,
    ESCAPE,
    RansModel,
    decode_level,
    encode_level,
    rans_decode,
    rans_encode,
)
from .rlgr import rlgr_decode, rlgr_encode, to_signed, to_unsigned

__all__ = [
    "ALPHABET_LIMIT",
    "CONTAINER_VERSION",
    "ContainerHeader",
    "HEADER_SIZE",
    "BitReader",
    "BitWriter",
    "ByteCodec",
    "ESCAPE",
    "QuantizerSpec",
    "RansModel",
    "available_codecs",
    "byte_compress",
    "byte_decompress",
    "codec_id_for",
    "pack_container",
    "section_lengths",
    "unpack_container",
    "decode_level",
    "dequantize",
    "encode_level",
    "get_codec",
    "quantize",
    "rans_decode",
    "rans_encode",
    "rlgr_decode",
    "rlgr_encode",
    "to_signed",
    "to_unsigned",
]
