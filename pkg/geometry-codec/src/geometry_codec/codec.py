"""Geometry encoder and decoder.

Encoding estimates normals when the cloud has none, samples signed distances
on the octree corners, prunes the octree, codes the control points of the
pruned tree with quantization in the loop and packs everything into a
``BVPC`` container. Decoding rebuilds the tree, keeps its voxel leaves and
turns every Bezier volume back into voxels.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from bv_shared import (
    LevelRangeError,
    configure_logging,
    get_settings,
    log_rate,
    log_stage,
)
from entropy_coding import section_lengths
from voxel_core import OctreeLevels, VoxelCloud, build_octree

from .bitstream import SECTION_NAMES, assemble_bitstream, parse_bitstream
from .inloop import GeometryWavelets, encode_in_loop
from .normals import estimate_normals
from .pruning import (
    PrunedOctree,
    PruningSpec,
    prune_distortion,
    prune_fixed,
    prune_rd,
    prune_zero_wavelets,
)
from .sdf import SdfField, compute_sdf
from .surface import raycast_blocks, subdivide_blocks, unique_voxels

logger = configure_logging("geometry-codec")


@dataclass(frozen=True, eq=False)
class EncodedGeometry:
    """A geometry stream and what went into it.

    Attributes:
        data: Container bytes
        num_points: Input voxel count
        pruning: Pruning that produced the tree
        pruned: The pruned octree
        wavelets: Coded control points of the pruned tree
        section_bits: Stored size in bits of the header and every section
    """

    data: bytes
    num_points: int
    pruning: PruningSpec
    pruned: PrunedOctree
    wavelets: GeometryWavelets
    section_bits: dict[str, int] = field(default_factory=dict)

    @property
    def start_level(self) -> int:
        return self.wavelets.start_level

    @property
    def bits_per_point(self) -> float:
        """Rate in bits per input voxel."""
        return 8.0 * len(self.data) / self.num_points


def prune_octree(
    spec: PruningSpec,
    octree: OctreeLevels,
    sdf: SdfField,
    start_level: int,
    qstep: float,
) -> PrunedOctree:
    """Apply a pruning method; all but ``fixed`` start from a full in-loop pass."""
    if spec.method == "none":
        return PrunedOctree.unpruned(octree)
    if spec.method == "fixed":
        return prune_fixed(octree, int(spec.value))
    full = encode_in_loop(sdf, start_level, qstep)
    if spec.method == "zero":
        return prune_zero_wavelets(octree, full, int(spec.value))
    if spec.method == "dist":
        return prune_distortion(octree, full, spec.value)
    return prune_rd(octree, full, spec.value)


def _coded_start(pruned: PrunedOctree, start_level: int) -> int:
    if not pruned.num_bvs:
        return start_level
    shallowest = pruned.shallowest_leaf_level()
    if shallowest < start_level:
        logger.warning(
            "Start level lowered to the shallowest BV",
            requested=start_level,
            used=shallowest,
        )
        return shallowest
    return start_level


def encode_geometry(
    cloud: VoxelCloud,
    *,
    start_level: Optional[int] = None,
    qstep: Optional[float] = None,
    pruning: PruningSpec | str = "none",
    compressor: Optional[str] = None,
    normal_neighbors: Optional[int] = None,
) -> EncodedGeometry:
    """Encode the voxel set of a cloud.

    Args:
        cloud: Voxel cloud; normals are estimated when absent
        start_level: Level of the directly quantized controls
        qstep: Quantization stepsize of the signed distances
        pruning: Pruning method, a :class:`PruningSpec` or its text form
        compressor: Byte codec for the container sections
        normal_neighbors: Neighbourhood size for normal estimation

    Returns:
        The encoded stream with its rate breakdown
    """
    settings = get_settings()
    start_level = settings.start_level if start_level is None else start_level
    qstep = settings.qstep if qstep is None else qstep
    compressor = settings.compressor if compressor is None else compressor
    spec = PruningSpec.parse(pruning) if isinstance(pruning, str) else pruning
    if not 0 <= start_level <= cloud.depth:
        raise LevelRangeError(f"start level {start_level} outside [0, {cloud.depth}]")
    if not qstep > 0:
        raise ValueError(f"stepsize must be positive, got {qstep}")

    octree = build_octree(cloud)
    if spec.method == "none":
        pruned = PrunedOctree.unpruned(octree)
        wavelets = GeometryWavelets.empty(start_level, qstep)
    else:
        if not cloud.has_normals:
            estimate = estimate_normals(cloud, normal_neighbors)
            cloud = cloud.with_normals(estimate.normals)
        sdf = compute_sdf(cloud, octree)
        pruned = prune_octree(spec, octree, sdf, start_level, qstep)
        start_level = _coded_start(pruned, start_level)
        wavelets = encode_in_loop(
            sdf, start_level, qstep, pruned.coded_shifts(start_level)
        )

    data = assemble_bitstream(pruned, wavelets, compressor)
    lengths = section_lengths(data)
    section_bits = {"header": 8 * (len(data) - sum(lengths))}
    section_bits.update((name, 8 * n) for name, n in zip(SECTION_NAMES, lengths))
    encoded = EncodedGeometry(
        data, cloud.num_points, spec, pruned, wavelets, section_bits
    )
    log_rate(
        logger,
        "geometry",
        len(data),
        pruning=str(spec),
        qstep=qstep,
        start_level=start_level,
        bvs=pruned.num_bvs,
        bits_per_point=round(encoded.bits_per_point, 4),
    )
    return encoded


def parse_reconstruction(text: str) -> tuple[str, float]:
    """Parse ``subdiv`` or ``raycast:r`` with r in voxels.

    Raises:
        ValueError: If the text names no known method
    """
    method, _, value = text.strip().lower().partition(":")
    if method == "subdiv" and not value:
        return "subdiv", 0.0
    if method == "raycast":
        try:
            extension = float(value) if value else 0.0
        except ValueError as exc:
            raise ValueError(f"raycast range '{value}' is not a number") from exc
        if extension < 0:
            raise ValueError(f"raycast range must be non-negative, got {extension}")
        return "raycast", extension
    raise ValueError(f"unknown reconstruction '{text}'")


def decode_geometry(data: bytes, *, reconstruction: str = "subdiv") -> VoxelCloud:
    """Decode a geometry container into voxels.

    Args:
        data: Container bytes
        reconstruction: ``subdiv`` or ``raycast:r``, r being the range
            extension in voxels beyond each BV along its rays

    Returns:
        The voxel leaves plus the surface voxels of every BV
    """
    method, extension = parse_reconstruction(reconstruction)
    stream = parse_bitstream(data)
    depth = stream.header.depth
    found = [stream.pruned.shifts(depth)]
    for batch in stream.bezier_volumes():
        if method == "subdiv":
            positions, _ = subdivide_blocks(
                batch.level, batch.shifts, batch.controls, depth
            )
        else:
            side = float(1 << (depth - batch.level))
            positions = raycast_blocks(
                batch.level,
                batch.shifts,
                batch.controls,
                depth,
                extension=extension / side,
            )
        found.append(positions)
        log_stage(
            logger,
            "bv reconstruction",
            level=batch.level,
            bvs=len(batch.shifts),
            voxels=len(positions),
        )
    positions = unique_voxels(np.concatenate(found), depth)
    logger.info(
        "Geometry decoded",
        voxels=len(positions),
        bvs=stream.pruned.num_bvs,
        reconstruction=method,
    )
    return VoxelCloud(depth, positions)
