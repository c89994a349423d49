"""Explicit voxels from Bezier volumes by subdivision or ray casting.

A Bezier volume (BV) is a surviving octree leaf whose field is the tri-linear
interpolation of its eight corner control points. Both reconstructions work
on batches of BVs of one level; outputs are Morton-sorted voxel positions.
"""

from dataclasses import dataclass

import numpy as np
from bv_shared import (
    DegenerateVolumeError,
    DimensionMismatchError,
    LevelRangeError,
    configure_logging,
)
from voxel_core import CORNER_OFFSETS, morton_encode_array

logger = configure_logging("geometry-codec")


def trilinear(controls: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Evaluate tri-linear fields at block-local coordinates.

    Args:
        controls: (n, 8) corner values in corner order
        local: (n, m, 3) coordinates in [0, 1]^3 of each field's block

    Returns:
        (n, m) field values
    """
    x, y, z = local[..., 0], local[..., 1], local[..., 2]
    result = np.zeros(local.shape[:-1])
    for j, (i, k, m) in enumerate(CORNER_OFFSETS):
        weight = (x if i else 1.0 - x) * (y if k else 1.0 - y)
        weight = weight * (z if m else 1.0 - z)
        result += controls[:, j, None] * weight
    return result


@dataclass(frozen=True, eq=False)
class BezierVolume:
    """One leaf block and its eight control points.

    Attributes:
        level: Cubic octree level
        shift: Block shift at that level
        controls: (8,) reconstructed control points in corner order
    """

    level: int
    shift: tuple[int, int, int]
    controls: np.ndarray

    def __post_init__(self) -> None:
        controls = np.asarray(self.controls, dtype=np.float64).ravel()
        if controls.shape != (8,):
            raise DimensionMismatchError("a Bezier volume has 8 control points")
        if self.level < 0 or any(not 0 <= s < (1 << self.level) for s in self.shift):
            raise LevelRangeError(f"shift {self.shift} outside level {self.level}")
        object.__setattr__(self, "controls", controls)

    def side(self, depth: int) -> int:
        """Edge length in voxels."""
        if self.level > depth:
            raise LevelRangeError(f"level {self.level} deeper than depth {depth}")
        return 1 << (depth - self.level)

    def evaluate(self, local: np.ndarray) -> np.ndarray:
        """Field values at (m, 3) block-local coordinates."""
        points = np.asarray(local, dtype=np.float64).reshape(1, -1, 3)
        return trilinear(self.controls[None, :], points)[0]


def has_c_crossing(bv: BezierVolume, c: float = 0.0) -> bool:
    """True iff ``min(controls) <= c <= max(controls)``."""
    return bool(crossing_mask(bv.controls[None, :], c)[0])


def crossing_mask(controls: np.ndarray, c: float = 0.0) -> np.ndarray:
    """Row-wise c-crossing test of (n, 8) control points."""
    return (controls.min(axis=1) <= c) & (c <= controls.max(axis=1))


def unique_voxels(positions: np.ndarray, depth: int) -> np.ndarray:
    """In-grid positions without duplicates, in Morton order."""
    positions = positions.reshape(-1, 3)
    limit = 1 << depth
    inside = np.all((positions >= 0) & (positions < limit), axis=1)
    positions = positions[inside]
    codes = morton_encode_array(positions, depth)
    _, first = np.unique(codes, return_index=True)
    result: np.ndarray = positions[first]
    return result


def subdivide_blocks(
    level: int,
    shifts: np.ndarray,
    controls: np.ndarray,
    depth: int,
    c: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Recursively split every BV of a level down to the voxels.

    Subblocks without a c-crossing are dropped; voxels with a crossing are
    emitted. Field values are evaluated from each BV's own control points,
    so shared subblock corners agree exactly.

    Args:
        level: Cubic level of the BVs
        shifts: (n, 3) BV shifts
        controls: (n, 8) control points
        depth: Voxel grid depth d >= level
        c: Level value of the surface

    Returns:
        (voxel positions (m, 3), owning BV index (m,)), sorted by owner then
        Morton order
    """
    if not 0 <= level <= depth:
        raise LevelRangeError(f"level {level} outside [0, {depth}]")
    shifts = np.asarray(shifts, dtype=np.int64).reshape(-1, 3)
    controls = np.asarray(controls, dtype=np.float64).reshape(-1, 8)
    if len(shifts) != len(controls):
        raise DimensionMismatchError("one control row per BV shift is required")

    owner = np.arange(len(shifts))
    local = np.zeros((len(shifts), 3), dtype=np.int64)
    for refinement in range(depth - level + 1):
        scale = float(1 << refinement)
        corners = (local[:, None, :] + CORNER_OFFSETS[None, :, :]) / scale
        keep = crossing_mask(trilinear(controls[owner], corners), c)
        owner, local = owner[keep], local[keep]
        if refinement == depth - level:
            break
        owner = np.repeat(owner, 8)
        local = (2 * local[:, None, :] + CORNER_OFFSETS[None, :, :]).reshape(-1, 3)

    positions = (shifts[owner] << (depth - level)) + local
    codes = morton_encode_array(positions, depth)
    order = np.lexsort((codes, owner))
    return positions[order], owner[order]


def subdivide(bv: BezierVolume, depth: int, c: float = 0.0) -> np.ndarray:
    """Voxels of one BV whose corners straddle ``c``, in Morton order."""
    positions, _ = subdivide_blocks(
        bv.level, np.array([bv.shift]), bv.controls[None, :], depth, c
    )
    return positions


def gradient(controls: np.ndarray) -> np.ndarray:
    """Constant-part gradient sums of (n, 8) control points, (n, 3)."""
    result = np.zeros((len(controls), 3))
    for axis in range(3):
        upper = CORNER_OFFSETS[:, axis] == 1
        upper_sum = controls[:, upper].sum(axis=1)
        result[:, axis] = upper_sum - controls[:, ~upper].sum(axis=1)
    return result


def dominant_axis(bv: BezierVolume) -> tuple[int, np.ndarray]:
    """Axis of the largest absolute gradient sum, ties going to x, then y.

    Returns:
        (axis index, (3,) gradient sums)

    Raises:
        DegenerateVolumeError: If the gradient is zero
    """
    sums = gradient(bv.controls[None, :])[0]
    if not np.any(sums):
        raise DegenerateVolumeError("zero gradient, no dominant axis")
    return int(np.argmax(np.abs(sums))), sums


def raycast_blocks(
    level: int,
    shifts: np.ndarray,
    controls: np.ndarray,
    depth: int,
    c: float = 0.0,
    extension: float = 0.0,
) -> np.ndarray:
    """Cast one ray per voxel column down each BV's dominant axis.

    Along a ray the field is linear between the entry and exit faces, so the
    crossing is ``t = (A - c) / (A - B)`` with A and B the face values. Hits
    with ``t`` in ``[-extension, 1 + extension]`` are voxelized; rays parallel
    to the surface are skipped. BVs with zero gradient are subdivided instead.

    Args:
        level: Cubic level of the BVs
        shifts: (n, 3) BV shifts
        controls: (n, 8) control points
        depth: Voxel grid depth
        c: Level value of the surface
        extension: Range extension in block-local units

    Returns:
        Morton-sorted unique voxel positions inside the grid
    """
    if not 0 <= level <= depth:
        raise LevelRangeError(f"level {level} outside [0, {depth}]")
    shifts = np.asarray(shifts, dtype=np.int64).reshape(-1, 3)
    controls = np.asarray(controls, dtype=np.float64).reshape(-1, 8)
    sums = gradient(controls)
    degenerate = ~np.any(sums != 0, axis=1)
    axes = np.argmax(np.abs(sums), axis=1)

    side = 1 << (depth - level)
    columns = (np.arange(side) + 0.5) / side
    u, v = (grid.ravel() for grid in np.meshgrid(columns, columns, indexing="ij"))
    found = [np.zeros((0, 3), dtype=np.int64)]
    for axis in range(3):
        members = np.flatnonzero((axes == axis) & ~degenerate)
        if len(members) == 0:
            continue
        across = [a for a in range(3) if a != axis]
        faces = np.zeros((2, len(u), 3))
        faces[:, :, across[0]] = u
        faces[:, :, across[1]] = v
        faces[1, :, axis] = 1.0
        shape = (len(members),) + faces[0].shape
        entry = trilinear(controls[members], np.broadcast_to(faces[0], shape))
        exit_ = trilinear(controls[members], np.broadcast_to(faces[1], shape))
        denominator = entry - exit_
        valid = denominator != 0
        t = np.divide(
            entry - c, denominator, out=np.full_like(entry, np.nan), where=valid
        )
        hit = valid & (t >= -extension) & (t <= 1.0 + extension)
        block, ray = np.nonzero(hit)
        local = np.empty((len(block), 3))
        local[:, across[0]] = u[ray]
        local[:, across[1]] = v[ray]
        local[:, axis] = t[block, ray]
        cells = np.floor(local * side).astype(np.int64)
        # the exit face itself belongs to the last voxel of the column
        cells[:, axis] = np.where(local[:, axis] == 1.0, side - 1, cells[:, axis])
        found.append(shifts[members[block]] * side + cells)

    if np.any(degenerate):
        logger.debug(
            "Degenerate BVs subdivided",
            level=level,
            count=int(np.count_nonzero(degenerate)),
        )
        positions, _ = subdivide_blocks(
            level, shifts[degenerate], controls[degenerate], depth, c
        )
        found.append(positions)
    return unique_voxels(np.concatenate(found), depth)


def raycast(
    bv: BezierVolume, depth: int, c: float = 0.0, extension: float = 0.0
) -> np.ndarray:
    """Ray-cast voxels of one BV.

    Raises:
        DegenerateVolumeError: If the BV has no dominant axis
    """
    dominant_axis(bv)
    return raycast_blocks(
        bv.level, np.array([bv.shift]), bv.controls[None, :], depth, c, extension
    )
