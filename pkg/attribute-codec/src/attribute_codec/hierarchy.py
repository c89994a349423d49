"""Nested spline spaces over one octree: shifts, two-scale maps and Gram matrices."""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from bv_shared import LevelRangeError, log_stage
from voxel_core import OctreeLevels, cube_corners

from .hilbert import (
    GramSystem,
    RankReduction,
    ShiftIndex,
    _check_order,
    logger,
    project,
    retain_full_rank,
    two_scale_matrix,
)


@dataclass(frozen=True, eq=False)
class SplineHierarchy:
    """Shift sets and Gram matrices of every level of one spline order.

    Order 1 walks the binary split tree (levels 0..3d, one shift per occupied
    block); order 2 walks the cubic octree (levels 0..d, one shift per unique
    block corner, the voxels themselves at level d).

    Attributes:
        octree: Octree the hierarchy was built from
        order: Spline order
        shifts: Per level, (m_l, 3) shifts
        two_scale: Per level l < top, the (m_l × m_{l+1}) two-scale matrix
        grams: Per level, the sparse Gram matrix
    """

    octree: OctreeLevels
    order: int
    shifts: list[np.ndarray]
    two_scale: list[sp.csr_matrix]
    grams: list[sp.csr_matrix]

    @property
    def depth(self) -> int:
        return self.octree.depth

    @property
    def top(self) -> int:
        """Finest level, where the shifts are the voxels."""
        return len(self.shifts) - 1

    def check_level(self, level: int) -> None:
        if not 0 <= level <= self.top:
            raise LevelRangeError(f"level {level} outside [0, {self.top}]")

    def level_of_cube(self, cube_level: int) -> int:
        """Hierarchy level matching an octree (cubic) level."""
        if not 0 <= cube_level <= self.depth:
            raise LevelRangeError(f"cubic level {cube_level} outside [0, {self.depth}]")
        return 3 * cube_level if self.order == 1 else cube_level

    def cross_gram(self, level: int) -> sp.csr_matrix:
        """Inner products between the bases of ``level`` and ``level + 1``."""
        return (self.two_scale[level] @ self.grams[level + 1]).tocsr()

    def system(self, level: int, attributes: np.ndarray) -> GramSystem:
        """Normal equations of ``level`` for the given voxel attributes."""
        self.check_level(level)
        return GramSystem(
            order=self.order,
            level=level,
            shifts=self.shifts[level],
            gram=self.grams[level],
            moments=self.moments(level, attributes),
        )

    def moments(self, level: int, attributes: np.ndarray) -> np.ndarray:
        """Inner products of the level basis with voxel attributes."""
        values = np.asarray(attributes, dtype=np.float64)
        for current in range(self.top - 1, level - 1, -1):
            values = self.two_scale[current] @ values
        return values

    def synthesize_values(self, level: int, coefficients: np.ndarray) -> np.ndarray:
        """Sample ``sum_n F_n phi_{level,n}`` at the voxels, in Morton order."""
        values = np.asarray(coefficients, dtype=np.float64)
        for current in range(level, self.top):
            values = self.two_scale[current].T @ values
        return values

    def even_children(self, level: int, coarse: np.ndarray) -> np.ndarray:
        """Fine-level rows of the shifts on the coarse lattice, -1 where absent.

        Order 2 maps corner ``n`` to ``2n``; order 1 maps a block to its first
        child along the split axis.
        """
        shifts = self.shifts[level][coarse].copy()
        if self.order == 1:
            axis = level % 3
            shifts[:, axis] *= 2
        else:
            shifts *= 2
        return self._index(level + 1).find(shifts)

    def _index(self, level: int) -> ShiftIndex:
        return self._indexes[level]

    @cached_property
    def _indexes(self) -> list[ShiftIndex]:
        return [ShiftIndex(shifts, self.depth) for shifts in self.shifts]

    @cached_property
    def reductions(self) -> list[RankReduction]:
        """Full-rank subsets of every level's basis."""
        return [retain_full_rank(gram) for gram in self.grams]

    def dimension(self, level: int) -> int:
        """Dimension of the level's space restricted to the points.

        Exact up to the dense rank-reduction limit; above it the count of
        functions that do not vanish on the cloud, capped at the voxel count.
        """
        reduction = self.reductions[level]
        count = len(reduction.indices)
        return count if reduction.exact else min(count, self.octree.num_voxels)

    def project_values(self, level: int, attributes: np.ndarray) -> np.ndarray:
        """Least-squares fit of the attributes in the level space, at the voxels."""
        system = self.system(level, attributes)
        coefficients = project(system, self.reductions[level])
        return self.synthesize_values(level, coefficients)


def build_hierarchy(
    octree: OctreeLevels, order: int = 2, *, coarsest: Optional[int] = None
) -> SplineHierarchy:
    """Build shifts, two-scale matrices and Gram matrices for all levels.

    Args:
        octree: Octree of the cloud
        order: 1 for block indicators, 2 for tri-linear hats
        coarsest: Lowest level needed; levels below it are left empty
    """
    _check_order(order)
    depth = octree.depth
    top = 3 * depth if order == 1 else depth
    coarsest = 0 if coarsest is None else coarsest
    if not 0 <= coarsest <= top:
        raise LevelRangeError(f"coarsest level {coarsest} outside [0, {top}]")

    shifts: list[np.ndarray] = []
    for level in range(top + 1):
        if level < coarsest:
            shifts.append(np.zeros((0, 3), dtype=np.int64))
        elif level == top:
            shifts.append(octree.shifts(3 * depth))
        elif order == 1:
            shifts.append(octree.shifts(level))
        else:
            shifts.append(cube_corners(octree, level).shifts)

    two_scale: list[sp.csr_matrix] = [sp.csr_matrix((0, 0))] * top
    grams: list[sp.csr_matrix] = [sp.csr_matrix((0, 0))] * (top + 1)
    grams[top] = sp.identity(len(shifts[top]), format="csr")
    for level in range(top - 1, coarsest - 1, -1):
        matrix = two_scale_matrix(
            shifts[level], shifts[level + 1], level=level, depth=depth, order=order
        )
        two_scale[level] = matrix
        grams[level] = (matrix @ grams[level + 1] @ matrix.T).tocsr()

    log_stage(
        logger,
        "hierarchy",
        order=order,
        levels=top + 1,
        shifts=[len(s) for s in shifts],
    )
    return SplineHierarchy(octree, order, shifts, two_scale, grams)
