"""Signed distances sampled on the corners of the occupied octree blocks."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from bv_shared import (
    DimensionMismatchError,
    LevelRangeError,
    configure_logging,
    log_stage,
)
from voxel_core import CornerSet, OctreeLevels, VoxelCloud, build_octree, cube_corners

logger = configure_logging("geometry-codec")


@dataclass(frozen=True, eq=False)
class SdfField:
    """Signed distance at every unique block corner of every cubic level.

    Values are in voxel units, positive outside the surface and negative
    inside. Corner ``n`` of cubic level ``l`` sits at ``n * 2^(d - l)``.

    Attributes:
        depth: Voxel grid depth d
        blocks: Per cubic level, shifts of the occupied blocks
        corners: Per cubic level, unique corners of those blocks
        values: Per cubic level, one signed distance per corner
    """

    depth: int
    blocks: list[np.ndarray]
    corners: list[CornerSet]
    values: list[np.ndarray]

    def check_level(self, level: int) -> None:
        if not 0 <= level <= self.depth:
            raise LevelRangeError(f"cubic level {level} outside [0, {self.depth}]")

    def sample(self, level: int, shifts: np.ndarray) -> np.ndarray:
        """Values at corner lattice shifts of a cubic level.

        Raises:
            DimensionMismatchError: If a shift is not a corner of an occupied block
        """
        self.check_level(level)
        index = self.corners[level].lookup(shifts)
        if np.any(index < 0):
            raise DimensionMismatchError(
                f"{int(np.count_nonzero(index < 0))} shifts are not level-{level} "
                "corners"
            )
        return self.values[level][index]


def compute_sdf(cloud: VoxelCloud, octree: Optional[OctreeLevels] = None) -> SdfField:
    """Signed distance of every corner to its nearest voxel.

    The candidate voxels of a corner are those in the blocks of the same level
    that share the corner. The distance is signed by the side of the nearest
    voxel's tangent plane the corner lies on; a corner on the plane counts as
    outside. Voxels are located at their integer origins.

    Raises:
        ValueError: If the cloud carries no normals
    """
    if cloud.normals is None:
        raise ValueError("signed distances need normals; estimate them first")
    octree = build_octree(cloud) if octree is None else octree
    points = cloud.positions.astype(np.float64)
    normals = cloud.normals
    voxel = np.repeat(np.arange(cloud.num_points), 8)

    blocks = []
    corner_sets = []
    values = []
    for level in range(cloud.depth + 1):
        corners = cube_corners(octree, level)
        scale = float(1 << (cloud.depth - level))
        candidate = corners.incidence[octree.block_of_voxel(3 * level)].ravel()
        offset = corners.shifts[candidate] * scale - points[voxel]
        squared = np.einsum("ij,ij->i", offset, offset)

        # nearest candidate per corner, lowest voxel index on ties
        order = np.lexsort((voxel, squared, candidate))
        first = np.ones(len(order), dtype=bool)
        first[1:] = candidate[order[1:]] != candidate[order[:-1]]
        pick = order[first]

        side = np.einsum("ij,ij->i", offset[pick], normals[voxel[pick]])
        sign = np.where(side < 0, -1.0, 1.0)
        blocks.append(octree.cube_shifts(level))
        corner_sets.append(corners)
        values.append(sign * np.sqrt(squared[pick]))
        log_stage(logger, "sdf level", level=level, corners=len(corners))

    return SdfField(cloud.depth, blocks, corner_sets, values)
