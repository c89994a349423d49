"""Attribute encoder and decoder over the region-adaptive transforms.

Attributes are transformed with RAHT (order 1) or the tri-linear cascade
(order 2), uniformly quantized and RLGR-coded per level and per channel. The
decoder rebuilds the transform from the geometry alone, so the stream only
carries coefficients plus a fingerprint of the voxel set it belongs to.
"""

import struct
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from bv_shared import (
    ChecksumError,
    DimensionMismatchError,
    LevelRangeError,
    configure_logging,
    get_settings,
    log_rate,
    log_stage,
)
from entropy_coding import (
    ContainerHeader,
    QuantizerSpec,
    codec_id_for,
    dequantize,
    pack_container,
    quantize,
    rlgr_decode,
    rlgr_encode,
    section_lengths,
    unpack_container,
)
from voxel_core import OctreeLevels, VoxelCloud, build_octree

from .color import rgb_to_yuv, yuv_to_rgb
from .hierarchy import build_hierarchy
from .raht import RahtCoefficients, raht_forward, raht_inverse
from .wavelets import BvCoefficients, build_cascade

logger = configure_logging("attribute-codec")

ATTRIBUTE_MAGIC = b"BVAT"
COLOUR_RAW = 0
COLOUR_YUV = 1
_META = struct.Struct("<BBBH")
_FINGERPRINT = struct.Struct("<II")
_STREAM = struct.Struct("<II")
SECTION_NAMES = ("meta", "fingerprint", "base", "details", "directory")


@dataclass(frozen=True, eq=False)
class EncodedAttributes:
    """An attribute stream and its rate breakdown.

    Attributes:
        data: Container bytes
        num_points: Voxels the attributes belong to
        order: Transform order
        quantized: Base indices followed by per-level detail indices
        section_bytes: Stored (compressed) size of every container section
    """

    data: bytes
    num_points: int
    order: int
    quantized: list[np.ndarray]
    section_bytes: dict[str, int] = field(default_factory=dict)

    @property
    def bits_per_point(self) -> float:
        return 8.0 * len(self.data) / self.num_points

    @property
    def nonzero_coefficients(self) -> int:
        return int(sum(np.count_nonzero(q) for q in self.quantized))


def geometry_fingerprint(cloud: VoxelCloud) -> tuple[int, int]:
    """Voxel count and CRC-32 of the Morton codes."""
    codes = np.ascontiguousarray(cloud.morton_codes, dtype="<i8")
    return cloud.num_points, zlib.crc32(codes.tobytes())


def _binary_nodes(octree: OctreeLevels, level: int) -> list[np.ndarray]:
    return [
        np.flatnonzero(octree.child_count[lv] == 2)
        for lv in range(level, 3 * octree.depth)
    ]


class _Transform:
    """Forward and inverse transform of one order, from a cubic start level."""

    def __init__(self, octree: OctreeLevels, order: int, start_level: int) -> None:
        self.octree = octree
        self.order = order
        self.level = 3 * start_level if order == 1 else start_level
        self.cascade = build_cascade(octree, 2, self.level) if order == 2 else None

    def forward(self, cloud: VoxelCloud) -> tuple[np.ndarray, list[np.ndarray]]:
        if self.cascade is None:
            raht = raht_forward(cloud, self.octree, start_level=self.level)
            return raht.base, raht.highpass
        bv = self.cascade.forward(cloud.attributes)
        return bv.base, bv.details

    def inverse(self, base: np.ndarray, details: list[np.ndarray]) -> np.ndarray:
        if self.cascade is None:
            nodes = _binary_nodes(self.octree, self.level)
            coeffs = RahtCoefficients(self.level, base, nodes, details)
            return raht_inverse(coeffs, self.octree)
        return self.cascade.inverse(BvCoefficients(self.level, base, details))

    def counts(self) -> list[int]:
        """Base count followed by the detail count of every level."""
        if self.cascade is None:
            nodes = _binary_nodes(self.octree, self.level)
            return [self.octree.num_blocks(self.level)] + [len(n) for n in nodes]
        bases = self.cascade.bases
        base = bases[0].num_coarse if bases else self.octree.num_voxels
        return [base] + [b.num_wavelets for b in bases]


def _pack_channels(indices: np.ndarray) -> bytes:
    out = bytearray()
    for channel in range(indices.shape[1]):
        payload = rlgr_encode(indices[:, channel])
        out += _STREAM.pack(len(indices), len(payload)) + payload
    return bytes(out)


def _unpack_channels(
    data: bytes, offset: int, channels: int
) -> tuple[np.ndarray, int]:
    columns = []
    count = 0
    for _ in range(channels):
        try:
            count, size = _STREAM.unpack_from(data, offset)
        except struct.error as exc:
            raise ChecksumError("attribute stream header is truncated") from exc
        offset += _STREAM.size
        columns.append(rlgr_decode(data[offset : offset + size], count))
        offset += size
    indices = np.stack(columns, axis=1) if columns else np.zeros((count, 0), np.int64)
    return indices, offset


def bv_encode(
    cloud: VoxelCloud,
    start_level: Optional[int] = None,
    qstep: Optional[float] = None,
    *,
    order: int = 2,
    compressor: Optional[str] = None,
    colour_space: str = "auto",
) -> EncodedAttributes:
    """Transform, quantize and entropy code the cloud's attributes.

    Args:
        cloud: Cloud with attributes
        start_level: Octree level where the cascade stops (default from settings)
        qstep: Quantization stepsize
        order: 1 for RAHT, 2 for the tri-linear transform
        compressor: Byte codec for the container sections
        colour_space: ``yuv`` converts RGB triplets first, ``raw`` codes the
            channels as given, ``auto`` picks ``yuv`` for three channels

    Returns:
        The encoded stream
    """
    settings = get_settings()
    if start_level is None:
        start_level = settings.attribute_start_level
    qstep = settings.qstep if qstep is None else qstep
    compressor = settings.compressor if compressor is None else compressor
    if order not in (1, 2):
        raise ValueError(f"attribute order must be 1 or 2, got {order}")
    if not 0 <= start_level <= cloud.depth:
        raise LevelRangeError(f"start level {start_level} outside [0, {cloud.depth}]")
    if cloud.num_channels == 0:
        raise DimensionMismatchError("cloud carries no attributes")
    if colour_space == "auto":
        colour_space = "yuv" if cloud.num_channels == 3 else "raw"
    if colour_space not in ("yuv", "raw"):
        raise ValueError(f"unknown colour space '{colour_space}'")
    colour = COLOUR_YUV if colour_space == "yuv" else COLOUR_RAW

    values = cloud.attributes
    if colour == COLOUR_YUV:
        values = rgb_to_yuv(values)
    transform = _Transform(build_octree(cloud), order, start_level)
    base, details = transform.forward(cloud.with_attributes(values))

    spec = QuantizerSpec(qstep)
    quantized = [quantize(base, spec)] + [quantize(d, spec) for d in details]
    num_points, crc = geometry_fingerprint(cloud)
    sections = [
        _META.pack(order, cloud.num_channels, colour, len(details)),
        _FINGERPRINT.pack(num_points, crc),
        _pack_channels(quantized[0]),
        b"".join(_pack_channels(q) for q in quantized[1:]),
        struct.pack(f"<{len(details)}I", *(len(d) for d in details)),
    ]
    header = ContainerHeader(
        magic=ATTRIBUTE_MAGIC,
        depth=cloud.depth,
        start_level=start_level,
        stepsize=qstep,
        compressor_id=codec_id_for(compressor),
    )
    data = pack_container(header, sections)
    lengths = section_lengths(data)
    section_bytes = {"header": len(data) - sum(lengths)}
    section_bytes.update(zip(SECTION_NAMES, lengths))

    encoded = EncodedAttributes(data, cloud.num_points, order, quantized, section_bytes)
    log_rate(
        logger,
        "attributes",
        len(data),
        order=order,
        qstep=qstep,
        bits_per_point=round(encoded.bits_per_point, 4),
    )
    return encoded


def bv_decode(data: bytes, geometry: VoxelCloud) -> np.ndarray:
    """Decode attributes for the voxels of ``geometry``.

    Returns:
        (N, k) attributes in the colour space they were given to the encoder

    Raises:
        ChecksumError: If the stream belongs to other geometry or is inconsistent
    """
    header, sections, _ = unpack_container(data, ATTRIBUTE_MAGIC)
    try:
        order, channels, colour, num_levels = _META.unpack(sections[0])
        num_points, crc = _FINGERPRINT.unpack(sections[1])
        directory = struct.unpack(f"<{num_levels}I", sections[4])
    except struct.error as exc:
        raise ChecksumError("attribute metadata sections are malformed") from exc
    if (num_points, crc) != geometry_fingerprint(geometry):
        raise ChecksumError("attribute stream was encoded for different geometry")
    if header.depth != geometry.depth or order not in (1, 2):
        raise ChecksumError("attribute stream header does not fit the geometry")

    transform = _Transform(build_octree(geometry), order, header.start_level)
    base, _ = _unpack_channels(sections[2], 0, channels)
    details = []
    offset = 0
    for count in directory:
        indices, offset = _unpack_channels(sections[3], offset, channels)
        if len(indices) != count:
            raise ChecksumError("detail count disagrees with the directory")
        details.append(indices)
    if [len(base)] + list(directory) != transform.counts():
        raise ChecksumError("coefficient counts do not match the geometry")
    log_stage(logger, "attribute decode", order=order, levels=num_levels)

    spec = QuantizerSpec(header.stepsize)
    values = transform.inverse(
        dequantize(base, spec), [dequantize(d, spec) for d in details]
    )
    return yuv_to_rgb(values) if colour == COLOUR_YUV else values


def smooth(cloud: VoxelCloud, level: int, *, order: int = 2) -> np.ndarray:
    """Attributes with every detail at or above octree ``level`` removed.

    This is the least-squares fit of the attributes in the level's spline
    space, sampled at the voxels.
    """
    if not 0 <= level <= cloud.depth:
        raise LevelRangeError(f"level {level} outside [0, {cloud.depth}]")
    octree = build_octree(cloud)
    coarsest = 3 * level if order == 1 else level
    hierarchy = build_hierarchy(octree, order, coarsest=coarsest)
    return hierarchy.project_values(coarsest, cloud.attributes)
