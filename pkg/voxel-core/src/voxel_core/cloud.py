"""Voxel clouds and voxelization."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from bv_shared import (
    DimensionMismatchError,
    EmptyCloudError,
    LevelRangeError,
    configure_logging,
)

from .morton import morton_encode_array

logger = configure_logging("voxel-core")

NORMAL_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class VoxelCloud:
    """Deduplicated integer voxels at depth ``d`` in strictly increasing Morton order.

    Attributes:
        depth: Bits per coordinate
        positions: (N, 3) int64 voxel coordinates in [0, 2^depth)
        attributes: (N, k) float64 per-voxel attribute vectors, k may be 0
        normals: Optional (N, 3) unit normals
    """

    depth: int
    positions: np.ndarray
    attributes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    normals: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "positions", positions)
        n = len(positions)

        attributes = (
            np.zeros((n, 0))
            if self.attributes is None
            else np.asarray(self.attributes, dtype=np.float64)
        )
        if attributes.size == 0:
            attributes = np.zeros((n, 0), dtype=np.float64)
        elif attributes.ndim == 1:
            attributes = attributes.reshape(n, -1)
        if attributes.shape[0] != n:
            raise DimensionMismatchError(
                f"{attributes.shape[0]} attribute rows for {n} voxels"
            )
        object.__setattr__(self, "attributes", attributes)

        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(normals) != n:
                raise DimensionMismatchError(f"{len(normals)} normals for {n} voxels")
            norms = np.linalg.norm(normals, axis=1)
            if n and np.max(np.abs(norms - 1.0)) > NORMAL_TOLERANCE:
                raise ValueError("normals must have unit length")
            object.__setattr__(self, "normals", normals)

        codes = morton_encode_array(positions, self.depth)
        if n > 1 and np.any(np.diff(codes) <= 0):
            raise ValueError("voxel positions must be unique and Morton-sorted")
        self.__dict__["morton_codes"] = codes

    @cached_property
    def morton_codes(self) -> np.ndarray:
        """Morton codes of the positions (3*depth bits)."""
        return morton_encode_array(self.positions, self.depth)

    @property
    def num_points(self) -> int:
        return len(self.positions)

    @property
    def num_channels(self) -> int:
        return int(self.attributes.shape[1])

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def with_attributes(self, attributes: np.ndarray) -> "VoxelCloud":
        """Copy of this cloud carrying new attributes."""
        return VoxelCloud(self.depth, self.positions, attributes, self.normals)

    def with_normals(self, normals: Optional[np.ndarray]) -> "VoxelCloud":
        """Copy of this cloud carrying new normals."""
        return VoxelCloud(self.depth, self.positions, self.attributes, normals)

    @classmethod
    def from_unsorted(
        cls,
        depth: int,
        positions: np.ndarray,
        attributes: Optional[np.ndarray] = None,
        normals: Optional[np.ndarray] = None,
    ) -> "VoxelCloud":
        """Sort unique voxel positions into Morton order.

        Raises:
            ValueError: If a position occurs twice
        """
        positions = np.asarray(positions, dtype=np.int64).reshape(-1, 3)
        order = np.argsort(morton_encode_array(positions, depth), kind="stable")
        attrs = (
            np.zeros((len(positions), 0))
            if attributes is None
            else np.asarray(attributes, dtype=np.float64).reshape(len(positions), -1)
        )
        return cls(
            depth,
            positions[order],
            attrs[order],
            None if normals is None else np.asarray(normals)[order],
        )


def voxelize(
    points: np.ndarray,
    attributes: Optional[np.ndarray],
    depth: int,
    *,
    origin: Optional[np.ndarray] = None,
    size: Optional[float] = None,
    normals: Optional[np.ndarray] = None,
) -> VoxelCloud:
    """Quantize real points to the 2^depth grid of a bounding cube.

    Points are scaled from the cube ``origin + [0, size)^3`` to ``[0, 2^depth)^3``
    and floored. Points landing in the same voxel are merged: attributes are
    averaged and normals averaged then renormalized. Without a declared cube the
    points are taken to be in voxel units already.

    Args:
        points: (n, 3) real coordinates
        attributes: Optional (n, k) attribute rows
        depth: Grid resolution in bits
        origin: Lower corner of the bounding cube
        size: Edge length of the bounding cube
        normals: Optional (n, 3) normals

    Returns:
        Morton-sorted VoxelCloud

    Raises:
        EmptyCloudError: If no points are given
        LevelRangeError: If a point lies outside the bounding cube
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise EmptyCloudError("cannot voxelize an empty point set")

    resolution = float(1 << depth)
    cube_origin = np.zeros(3) if origin is None else np.asarray(origin, np.float64)
    cube_size = resolution if size is None else float(size)
    if cube_size <= 0:
        raise ValueError("bounding cube size must be positive")

    grid = np.floor((points - cube_origin) / cube_size * resolution).astype(np.int64)
    if grid.min() < 0 or grid.max() >= resolution:
        raise LevelRangeError(f"points fall outside the cube at depth {depth}")

    codes = morton_encode_array(grid, depth)
    unique_codes, first, inverse, counts = np.unique(
        codes, return_index=True, return_inverse=True, return_counts=True
    )
    positions = grid[first]

    attrs = np.zeros((len(unique_codes), 0))
    if attributes is not None:
        values = np.asarray(attributes, dtype=np.float64).reshape(len(points), -1)
        sums = np.zeros((len(unique_codes), values.shape[1]))
        np.add.at(sums, inverse, values)
        attrs = sums / counts[:, None]

    merged_normals = None
    if normals is not None:
        raw = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
        sums = np.zeros((len(unique_codes), 3))
        np.add.at(sums, inverse, raw)
        lengths = np.linalg.norm(sums, axis=1)
        # Opposing normals cancel; keep the first contributor's direction.
        degenerate = lengths < 1e-12
        sums[degenerate] = raw[first[degenerate]]
        merged_normals = sums / np.linalg.norm(sums, axis=1, keepdims=True)

    if len(unique_codes) < len(points):
        logger.debug(
            "Merged duplicate voxels",
            points=len(points),
            voxels=len(unique_codes),
            depth=depth,
        )
    return VoxelCloud(depth, positions, attrs, merged_normals)
