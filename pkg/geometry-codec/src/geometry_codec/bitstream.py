"""Geometry container: occupancy, leaf flags and rANS-coded control points."""

import struct
from dataclasses import dataclass

import numpy as np
from bv_shared import (
    BitstreamError,
    ChecksumError,
    CodecError,
    DimensionMismatchError,
    configure_logging,
    log_stage,
)
from entropy_coding import (
    ContainerHeader,
    codec_id_for,
    decode_level,
    encode_level,
    pack_container,
    unpack_container,
)
from voxel_core import block_corners

from .inloop import GeometryWavelets, child_only, decode_in_loop
from .pruning import PrunedOctree

logger = configure_logging("geometry-codec")

GEOMETRY_MAGIC = b"BVPC"
SECTION_NAMES = ("occupancy", "leaf_flags", "start_controls", "wavelets", "directory")


@dataclass(frozen=True, eq=False)
class BvBatch:
    """Bezier volumes of one level.

    Attributes:
        level: Cubic level
        shifts: (n, 3) block shifts
        controls: (n, 8) reconstructed control points in corner order
    """

    level: int
    shifts: np.ndarray
    controls: np.ndarray


@dataclass(frozen=True, eq=False)
class GeometryStream:
    """Everything a geometry container holds, decoded."""

    header: ContainerHeader
    pruned: PrunedOctree
    wavelets: GeometryWavelets

    def bezier_volumes(self) -> list[BvBatch]:
        """BVs grouped by level, shallowest first."""
        wavelets = self.wavelets
        coded = self.pruned.coded_shifts(wavelets.start_level)
        batches = []
        for i, shifts in enumerate(coded):
            level = wavelets.start_level + i
            rows = self.pruned.bv_rows(level)
            if len(rows) == 0:
                continue
            corners = wavelets.corners[i]
            controls = wavelets.reconstruction[i][corners.incidence[rows]]
            batches.append(BvBatch(level, shifts[rows], controls))
        return batches


def assemble_bitstream(
    pruned: PrunedOctree, wavelets: GeometryWavelets, compressor: str
) -> bytes:
    """Pack a pruned tree and its coefficients into a container.

    Raises:
        DimensionMismatchError: If the coefficients do not match the tree
    """
    start = wavelets.start_level
    if len(pruned.coded_shifts(start)) != wavelets.num_levels:
        raise DimensionMismatchError("coefficients do not cover the tree's BVs")
    occupancy = b"".join(
        pruned.occupancy_codes(level).tobytes() for level in range(pruned.depth)
    )
    flags = np.packbits(pruned.leaf_flags(start)).tobytes()
    controls = encode_level(wavelets.start_q, start) if wavelets.num_levels else b""
    payloads = [
        encode_level(q, start + i + 1) for i, q in enumerate(wavelets.residual_q)
    ]
    directory = struct.pack(f"<{len(payloads)}I", *(len(p) for p in payloads))
    header = ContainerHeader(
        magic=GEOMETRY_MAGIC,
        depth=pruned.depth,
        start_level=start,
        stepsize=wavelets.qstep,
        compressor_id=codec_id_for(compressor),
    )
    sections = [occupancy, flags, controls, b"".join(payloads), directory]
    return pack_container(header, sections)


def parse_bitstream(data: bytes) -> GeometryStream:
    """Inverse of :func:`assemble_bitstream`.

    Raises:
        BitstreamError: If the container is malformed or inconsistent
    """
    header, sections, _ = unpack_container(data, GEOMETRY_MAGIC)
    depth, start = header.depth, header.start_level
    if start > depth:
        raise ChecksumError(f"start level {start} below depth {depth}")
    try:
        pruned = PrunedOctree.from_stream(depth, start, sections[0], sections[1])
        coded = pruned.coded_shifts(start)
    except BitstreamError:
        raise
    except CodecError as exc:
        raise ChecksumError(f"inconsistent tree: {exc}") from exc
    corners = [block_corners(s, 3 * (start + i), depth) for i, s in enumerate(coded)]

    if len(sections[4]) % 4 or len(sections[4]) // 4 != max(len(corners) - 1, 0):
        raise ChecksumError("wavelet directory does not match the coded levels")
    lengths = struct.unpack(f"<{len(sections[4]) // 4}I", sections[4])
    if sum(lengths) != len(sections[3]):
        raise ChecksumError("wavelet payloads do not fill their section")

    if corners:
        start_q, _ = decode_level(sections[2], len(corners[0]))
    elif sections[2]:
        raise ChecksumError("start controls present without coded levels")
    else:
        start_q = np.zeros(0, dtype=np.int64)
    residual_q = []
    offset = 0
    for i, length in enumerate(lengths):
        count = int(np.count_nonzero(child_only(corners[i + 1].shifts)))
        symbols, _ = decode_level(sections[3][offset : offset + length], count)
        residual_q.append(symbols)
        offset += length
    log_stage(
        logger,
        "geometry parse",
        depth=depth,
        start_level=start,
        coded_levels=len(corners),
        bvs=pruned.num_bvs,
    )
    wavelets = decode_in_loop(corners, start, header.stepsize, start_q, residual_q)
    return GeometryStream(header, pruned, wavelets)
