"""Shared fixtures for attribute-codec tests."""

import itertools

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


def full_grid(depth: int, attributes: np.ndarray | None = None) -> VoxelCloud:
    """Every voxel of a 2^depth grid."""
    side = range(1 << depth)
    positions = np.array(list(itertools.product(side, side, side)))
    return VoxelCloud.from_unsorted(depth, positions, attributes)


def unit_points(cloud: VoxelCloud) -> np.ndarray:
    return cloud.positions / float(1 << cloud.depth)


SURFACES = ("sphere", "torus", "plane")


def surface_cloud(shape: str, depth: int, seed: int = 0) -> VoxelCloud:
    """One-voxel shell around a sphere, torus or tilted plane with wavy RGB.

    The seed moves the surface by up to half a voxel, which changes the
    occupancy pattern without changing the shape.
    """
    side = float(1 << depth)
    grid = np.indices((1 << depth,) * 3).reshape(3, -1).T
    centre = side / 2.0 + np.random.default_rng(seed).uniform(-0.5, 0.5, size=3)
    offset = grid + 0.5 - centre
    if shape == "sphere":
        distance = np.linalg.norm(offset, axis=1) - 0.4 * side
    elif shape == "torus":
        ring = np.hypot(offset[:, 0], offset[:, 1]) - 0.3 * side
        distance = np.hypot(ring, offset[:, 2]) - 0.12 * side
    elif shape == "plane":
        normal = np.array([0.2, -0.3, 1.0])
        distance = offset @ (normal / np.linalg.norm(normal))
    else:
        raise ValueError(f"unknown surface '{shape}'")
    positions = grid[np.abs(distance) <= 0.5]

    angle = 2.0 * np.pi * (positions + 0.5) / side
    wave = np.column_stack(
        [
            np.sin(angle[:, 0]) * np.cos(angle[:, 1]),
            np.cos(angle[:, 1]) * np.sin(angle[:, 2]),
            np.sin(angle[:, 0] + angle[:, 2]),
        ]
    )
    return VoxelCloud.from_unsorted(depth, positions, np.rint(128.0 + 100.0 * wave))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
