"""Sparse voxel octree over the binary x→y→z split tree.

Binary level ``l`` groups voxels by their length-``l`` Morton prefix, so a block
at ``l = 3l' + r`` is a cuboid with ``l' + 1`` bits in the first ``r`` axes and
``l'`` bits in the others. Cubic octree level ``l`` is binary level ``3 * l``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from bv_shared import EmptyCloudError, LevelRangeError

from .cloud import VoxelCloud
from .morton import MAX_DEPTH, morton_decode_array, morton_encode_array

# Offset j of a block corner is (j >> 2 & 1, j >> 1 & 1, j & 1), the child order.
CORNER_OFFSETS = np.array(
    [[(j >> 2) & 1, (j >> 1) & 1, j & 1] for j in range(8)], dtype=np.int64
)


def axis_bits(level: int) -> tuple[int, int, int]:
    """Bits per axis of a binary-level block shift."""
    return (level + 2) // 3, (level + 1) // 3, level // 3


def split_axis(level: int) -> int:
    """Axis split when refining binary level ``level`` to ``level + 1``."""
    return level % 3


@dataclass(frozen=True, eq=False)
class OctreeLevels:
    """Occupied blocks of every binary level 0..3d.

    Attributes:
        depth: Voxel grid depth d
        codes: Per level, sorted Morton prefixes of the occupied blocks
        weights: Per level, number of voxels in each block
        first: Per level, index of each block's first voxel in Morton order
        parent: Per level, index of each block's parent (level 0 holds -1)
        child_start: Per level, index of each block's first child one level down
        child_count: Per level, number of children (0 at level 3d)
    """

    depth: int
    codes: list[np.ndarray]
    weights: list[np.ndarray]
    first: list[np.ndarray]
    parent: list[np.ndarray]
    child_start: list[np.ndarray]
    child_count: list[np.ndarray]

    @property
    def num_levels(self) -> int:
        return 3 * self.depth + 1

    @property
    def num_voxels(self) -> int:
        return int(self.weights[0][0])

    def check_level(self, level: int) -> None:
        if not 0 <= level <= 3 * self.depth:
            raise LevelRangeError(f"level {level} outside [0, {3 * self.depth}]")

    def num_blocks(self, level: int) -> int:
        self.check_level(level)
        return len(self.codes[level])

    def shifts(self, level: int) -> np.ndarray:
        """Integer block shifts at a binary level, (n, 3)."""
        self.check_level(level)
        return self._shifts[level]

    @cached_property
    def _shifts(self) -> list[np.ndarray]:
        result = []
        positions = self._positions
        for level in range(self.num_levels):
            bits = np.array(axis_bits(level), dtype=np.int64)
            result.append(positions[self.first[level]] >> (self.depth - bits))
        return result

    @cached_property
    def _positions(self) -> np.ndarray:
        return morton_decode_array(self.codes[-1], self.depth)

    def block_of_voxel(self, level: int) -> np.ndarray:
        """Index of the level block containing each voxel."""
        self.check_level(level)
        return np.repeat(np.arange(len(self.codes[level])), self.weights[level])

    def cube_shifts(self, level: int) -> np.ndarray:
        """Block shifts of cubic level ``level`` (binary level 3*level)."""
        return self.shifts(3 * level)

    def cube_blocks(self, level: int) -> int:
        return self.num_blocks(3 * level)

    def cube_parent(self, level: int) -> np.ndarray:
        """Index of each cubic-level block's parent at cubic level - 1."""
        if not 1 <= level <= self.depth:
            raise LevelRangeError(f"cubic level {level} has no parent level")
        index = self.parent[3 * level]
        index = self.parent[3 * level - 1][index]
        return self.parent[3 * level - 2][index]

    def cube_children(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """Cubic children of every block at cubic level ``level``.

        Returns:
            (child_start, child_count) into the cubic level below; children of a
            block are contiguous because blocks are Morton-sorted
        """
        if not 0 <= level < self.depth:
            raise LevelRangeError(f"cubic level {level} has no children")
        parents = self.cube_parent(level + 1)
        count = np.bincount(parents, minlength=self.cube_blocks(level))
        start = np.concatenate(([0], np.cumsum(count)[:-1]))
        return start, count

    def occupancy_codes(self, level: int) -> np.ndarray:
        """8-bit child occupancy of every block at cubic level ``level``.

        Child ``j`` sets bit ``7 - j`` so the first Morton child is the MSB.
        """
        if not 0 <= level < self.depth:
            raise LevelRangeError(f"cubic level {level} has no children")
        parents = self.cube_parent(level + 1)
        child_index = (self.codes[3 * level + 3] & 0b111).astype(np.int64)
        occupancy = np.zeros(self.cube_blocks(level), dtype=np.int64)
        np.bitwise_or.at(occupancy, parents, 1 << (7 - child_index))
        return occupancy.astype(np.uint8)


def build_octree(cloud: VoxelCloud) -> OctreeLevels:
    """Group Morton-sorted voxels into the blocks of every binary level.

    Raises:
        EmptyCloudError: If the cloud has no voxels
    """
    if cloud.num_points == 0:
        raise EmptyCloudError("cannot build an octree over an empty cloud")

    depth = cloud.depth
    total_bits = 3 * depth
    voxel_codes = cloud.morton_codes
    n = len(voxel_codes)

    codes: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    first: list[np.ndarray] = []
    parent: list[np.ndarray] = []
    for level in range(total_bits + 1):
        prefix = voxel_codes >> (total_bits - level)
        starts = np.concatenate(([0], np.flatnonzero(np.diff(prefix)) + 1))
        codes.append(prefix[starts])
        first.append(starts)
        weights.append(np.diff(np.append(starts, n)))
        if level == 0:
            parent.append(np.full(1, -1, dtype=np.int64))
        else:
            parent.append(np.searchsorted(codes[level - 1], codes[level] >> 1))

    child_start: list[np.ndarray] = []
    child_count: list[np.ndarray] = []
    for level in range(total_bits + 1):
        if level == total_bits:
            child_start.append(np.zeros(len(codes[level]), dtype=np.int64))
            child_count.append(np.zeros(len(codes[level]), dtype=np.int64))
            continue
        count = np.bincount(parent[level + 1], minlength=len(codes[level]))
        child_count.append(count)
        child_start.append(np.concatenate(([0], np.cumsum(count)[:-1])))

    return OctreeLevels(depth, codes, weights, first, parent, child_start, child_count)


@dataclass(frozen=True, eq=False)
class CornerSet:
    """Unique corners of the occupied blocks at one binary level.

    Attributes:
        level: Binary level
        shifts: (m, 3) corner lattice shifts in the level's per-axis units
        codes: Morton codes of the shifts (depth + 1 bits per axis), sorted
        incidence: (n_blocks, 8) index into ``shifts`` of each block corner
    """

    level: int
    depth: int
    shifts: np.ndarray
    codes: np.ndarray
    incidence: np.ndarray

    def __len__(self) -> int:
        return len(self.shifts)

    def lookup(self, shifts: np.ndarray) -> np.ndarray:
        """Index of each given shift in this set, -1 where absent."""
        return lookup_codes(self.codes, corner_codes(shifts, self.depth))

    def corner_blocks(self) -> sp.csr_matrix:
        """Sparse (corners × blocks) incidence: which blocks share each corner."""
        n_blocks = len(self.incidence)
        rows = self.incidence.ravel()
        cols = np.repeat(np.arange(n_blocks), 8)
        data = np.ones(len(rows), dtype=bool)
        return sp.csr_matrix((data, (rows, cols)), shape=(len(self), n_blocks))


def corner_codes(shifts: np.ndarray, depth: int) -> np.ndarray:
    """Morton codes of corner shifts, which may equal 2^depth in an axis."""
    if depth + 1 > MAX_DEPTH:
        raise LevelRangeError(f"depth {depth} too large for corner codes")
    return morton_encode_array(np.asarray(shifts, np.int64), depth + 1)


def lookup_codes(sorted_codes: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Position of each query in ``sorted_codes``, -1 where absent."""
    queries = np.asarray(queries, dtype=np.int64)
    if len(sorted_codes) == 0:
        return np.full(len(queries), -1, dtype=np.int64)
    index = np.minimum(np.searchsorted(sorted_codes, queries), len(sorted_codes) - 1)
    return np.where(sorted_codes[index] == queries, index, -1)


def block_corners(block_shifts: np.ndarray, level: int, depth: int) -> CornerSet:
    """Deduplicated corners of the given blocks of a binary level.

    Args:
        block_shifts: (n, 3) shifts of the blocks, in any subset of the level
        level: Binary level of the shifts
        depth: Voxel grid depth d

    Returns:
        CornerSet in Morton order with the block→corner incidence
    """
    block_shifts = np.asarray(block_shifts, dtype=np.int64).reshape(-1, 3)
    all_corners = block_shifts[:, None, :] + CORNER_OFFSETS[None, :, :]
    all_corners = all_corners.reshape(-1, 3)
    codes = corner_codes(all_corners, depth)
    unique, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
    return CornerSet(
        level=level,
        depth=depth,
        shifts=all_corners[first],
        codes=unique,
        incidence=inverse.reshape(-1, 8),
    )


def unique_corners(octree: OctreeLevels, level: int) -> CornerSet:
    """Deduplicated corners of every occupied block at a binary level."""
    octree.check_level(level)
    return block_corners(octree.shifts(level), level, octree.depth)


def cube_corners(octree: OctreeLevels, level: int) -> CornerSet:
    """Corners of the cubic octree at cubic level ``level``."""
    if not 0 <= level <= octree.depth:
        raise LevelRangeError(f"cubic level {level} outside [0, {octree.depth}]")
    return unique_corners(octree, 3 * level)
