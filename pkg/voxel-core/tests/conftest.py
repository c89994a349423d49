"""Shared fixtures for voxel-core tests."""

import numpy as np
import pytest
from voxel_core import VoxelCloud


def random_cloud(
    rng: np.random.Generator, depth: int, count: int, channels: int = 1
) -> VoxelCloud:
    """Random cloud of at most ``count`` distinct voxels."""
    positions = rng.integers(0, 1 << depth, size=(count, 3))
    positions = np.unique(positions, axis=0)
    attributes = rng.normal(size=(len(positions), channels))
    return VoxelCloud.from_unsorted(depth, positions, attributes)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
