"""Region-adaptive Haar transform over the binary split tree.

Every binary node merges its two children with the Givens rotation

    [F̄]   [ a  b] [F̄0]
    [Ḡ] = [-b  a] [F̄1],   a = sqrt(w0 / (w0 + w1)),  b = sqrt(w1 / (w0 + w1))

where ``w`` are subtree voxel counts; unary nodes pass their child through.
Coefficients are normalized, so ``F̄ = sqrt(w) * mean`` and the transform is
orthonormal.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from bv_shared import DimensionMismatchError, LevelRangeError
from voxel_core import OctreeLevels, VoxelCloud, build_octree


@dataclass(frozen=True, eq=False)
class RahtCoefficients:
    """Output of :func:`raht_forward`.

    Attributes:
        start_level: Binary level of the low-pass coefficients
        base: (n_start, k) normalized low-pass coefficients at ``start_level``
        nodes: Per level from ``start_level`` to 3d-1, indices of binary nodes
        highpass: Per level, (len(nodes), k) high-pass coefficients
    """

    start_level: int
    base: np.ndarray
    nodes: list[np.ndarray]
    highpass: list[np.ndarray]

    @property
    def dc(self) -> np.ndarray:
        if self.start_level != 0:
            raise LevelRangeError("dc is only defined for a cascade down to level 0")
        return self.base[0]

    @property
    def num_coefficients(self) -> int:
        return len(self.base) + sum(len(h) for h in self.highpass)

    def flatten(self) -> np.ndarray:
        """All coefficients, low-pass first then level-major, Morton-minor."""
        return np.concatenate([self.base, *self.highpass], axis=0)

    def energy(self) -> np.ndarray:
        return np.sum(self.flatten() ** 2, axis=0)


def raht_weights(octree: OctreeLevels) -> list[np.ndarray]:
    """Voxel count of every node, per binary level."""
    return [w.copy() for w in octree.weights]


def _rotation(
    octree: OctreeLevels, level: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Child indices, binary mask and Givens coefficients of one level."""
    start = octree.child_start[level]
    binary = octree.child_count[level] == 2
    weights = octree.weights[level + 1].astype(np.float64)
    w0 = weights[start[binary]]
    w1 = weights[start[binary] + 1]
    total = w0 + w1
    return start, binary, np.sqrt(w0 / total)[:, None], np.sqrt(w1 / total)[:, None]


def raht_forward(
    cloud: VoxelCloud,
    octree: Optional[OctreeLevels] = None,
    *,
    start_level: int = 0,
) -> RahtCoefficients:
    """Analyze the cloud's attributes bottom-up.

    Args:
        cloud: Cloud with attributes
        octree: Octree of ``cloud``; built when omitted
        start_level: Binary level where the cascade stops

    Returns:
        Normalized low-pass coefficients at ``start_level`` and the high-pass
        coefficients of every binary node below it
    """
    octree = build_octree(cloud) if octree is None else octree
    top = 3 * octree.depth
    if not 0 <= start_level <= top:
        raise LevelRangeError(f"start level {start_level} outside [0, {top}]")
    if cloud.num_points != octree.num_voxels:
        raise DimensionMismatchError("octree does not match the cloud")

    values = cloud.attributes.astype(np.float64)
    nodes: list[np.ndarray] = []
    highpass: list[np.ndarray] = []
    for level in range(top - 1, start_level - 1, -1):
        start, binary, a, b = _rotation(octree, level)
        first = values[start[binary]]
        second = values[start[binary] + 1]
        lowpass = values[start].copy()
        lowpass[binary] = a * first + b * second
        nodes.append(np.flatnonzero(binary))
        highpass.append(a * second - b * first)
        values = lowpass
    nodes.reverse()
    highpass.reverse()
    return RahtCoefficients(start_level, values, nodes, highpass)


def raht_inverse(coeffs: RahtCoefficients, octree: OctreeLevels) -> np.ndarray:
    """Synthesize voxel attributes top-down; the transpose of the analysis.

    Raises:
        DimensionMismatchError: If the coefficients do not fit the octree
    """
    top = 3 * octree.depth
    if len(coeffs.highpass) != top - coeffs.start_level:
        raise DimensionMismatchError("coefficient levels do not match the octree")
    if len(coeffs.base) != octree.num_blocks(coeffs.start_level):
        raise DimensionMismatchError("low-pass count does not match the octree")

    values = np.asarray(coeffs.base, dtype=np.float64)
    for offset, level in enumerate(range(coeffs.start_level, top)):
        start, binary, a, b = _rotation(octree, level)
        high = coeffs.highpass[offset]
        if len(high) != int(binary.sum()):
            raise DimensionMismatchError(
                f"level {level} has {int(binary.sum())} binary nodes, got {len(high)}"
            )
        children = np.zeros((octree.num_blocks(level + 1),) + values.shape[1:])
        low = values[binary]
        children[start] = values
        children[start[binary]] = a * low - b * high
        children[start[binary] + 1] = b * low + a * high
        values = children
    return values
