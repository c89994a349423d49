"""Shared fixtures for geometry-codec tests."""

import numpy as np
import pytest
from voxel_core import VoxelCloud


def random_cloud(
    rng: np.random.Generator, depth: int, count: int, with_normals: bool = True
) -> VoxelCloud:
    """Random cloud of at most ``count`` distinct voxels with random normals."""
    positions = np.unique(rng.integers(0, 1 << depth, size=(count, 3)), axis=0)
    normals = None
    if with_normals:
        normals = rng.normal(size=(len(positions), 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return VoxelCloud.from_unsorted(depth, positions, normals=normals)


def sphere_cloud(depth: int, radius: float, with_normals: bool = True) -> VoxelCloud:
    """Voxel shell of a sphere centred in the grid, normals pointing outward."""
    side = 1 << depth
    grid = np.indices((side, side, side)).reshape(3, -1).T
    offset = grid - (side - 1) / 2.0
    distance = np.linalg.norm(offset, axis=1)
    keep = np.abs(distance - radius) <= 0.5
    normals = offset[keep] / distance[keep, None] if with_normals else None
    return VoxelCloud.from_unsorted(depth, grid[keep], normals=normals)


def plane_cloud(depth: int, height: int, with_normals: bool = True) -> VoxelCloud:
    """Full horizontal layer of voxels at ``z = height``, normals +z."""
    side = 1 << depth
    xy = np.indices((side, side)).reshape(2, -1).T
    positions = np.column_stack((xy, np.full(len(xy), height)))
    normals = np.tile([0.0, 0.0, 1.0], (len(xy), 1)) if with_normals else None
    return VoxelCloud.from_unsorted(depth, positions, normals=normals)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
