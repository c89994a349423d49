"""Shared fixtures for pcc-tools tests."""

import numpy as np
import pytest
from voxel_core import VoxelCloud


def random_cloud(
    rng: np.random.Generator, depth: int, count: int, colours: bool = True
) -> VoxelCloud:
    """Random cloud of at most ``count`` distinct voxels with RGB colours."""
    positions = np.unique(rng.integers(0, 1 << depth, size=(count, 3)), axis=0)
    attributes = None
    if colours:
        attributes = rng.integers(0, 256, size=(len(positions), 3)).astype(float)
    return VoxelCloud.from_unsorted(depth, positions, attributes)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
