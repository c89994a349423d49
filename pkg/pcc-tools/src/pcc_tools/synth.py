"""Synthetic voxelized surfaces with analytic normals and colour fields."""

from typing import Callable, Literal

import numpy as np
from bv_shared import LevelRangeError, configure_logging
from voxel_core import VoxelCloud, voxelize

logger = configure_logging("pcc-tools")

Shape = Literal["sphere", "plane", "torus"]
Field = Literal["smooth-gradient", "smooth-wave", "checker"]

SHAPES: tuple[str, ...] = ("sphere", "plane", "torus")
FIELDS: tuple[str, ...] = ("smooth-gradient", "smooth-wave", "checker")
MAX_DEPTH = 9

# Surface samples per unit area; leaves about e^-8 of the surface voxels empty.
SAMPLE_DENSITY = 8.0
CHECKER_SIDE = 8
CHECKER_COLOURS = np.array([[230.0, 40.0, 40.0], [30.0, 60.0, 220.0]])

Sampler = Callable[[np.random.Generator, float], tuple[np.ndarray, np.ndarray]]


def _sphere(rng: np.random.Generator, side: float) -> tuple[np.ndarray, np.ndarray]:
    radius = 0.4 * side
    count = int(SAMPLE_DENSITY * 4.0 * np.pi * radius**2)
    normals = rng.normal(size=(count, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return side / 2.0 + radius * normals, normals


def _plane(rng: np.random.Generator, side: float) -> tuple[np.ndarray, np.ndarray]:
    # One jittered sample per half-voxel cell, so every column is hit.
    steps = 2 * int(side)
    cells = np.indices((steps, steps)).reshape(2, -1).T
    count = len(cells)
    points = np.empty((count, 3))
    points[:, :2] = (cells + rng.uniform(0.0, 1.0, size=(count, 2))) / 2.0
    points[:, 2] = np.floor(side / 2.0) + 0.5
    normals = np.tile([0.0, 0.0, 1.0], (count, 1))
    return points, normals


def _torus(rng: np.random.Generator, side: float) -> tuple[np.ndarray, np.ndarray]:
    major, minor = 0.3 * side, 0.12 * side
    target = int(SAMPLE_DENSITY * 4.0 * np.pi**2 * major * minor)
    # Area element is proportional to major + minor*cos(phi).
    phi = np.zeros(0)
    while len(phi) < target:
        candidates = rng.uniform(0.0, 2.0 * np.pi, size=target)
        accept = rng.uniform(0.0, major + minor, size=target)
        phi = np.concatenate(
            [phi, candidates[accept <= major + minor * np.cos(candidates)]]
        )
    phi = phi[:target]
    theta = rng.uniform(0.0, 2.0 * np.pi, size=target)
    normals = np.column_stack(
        [np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), np.sin(phi)]
    )
    ring = major + minor * np.cos(phi)
    points = np.column_stack(
        [ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)]
    )
    return side / 2.0 + points, normals


_SAMPLERS: dict[str, Sampler] = {"sphere": _sphere, "plane": _plane, "torus": _torus}


def colour_field(field: str, positions: np.ndarray, depth: int) -> np.ndarray:
    """RGB colours of a named field at voxel positions.

    ``smooth-gradient`` is an affine ramp over the bounding cube, ``smooth-wave``
    a product of sines and cosines with half a period across the cube, and
    ``checker`` alternates two colours on an 8-voxel checkerboard.
    """
    positions = np.asarray(positions, dtype=np.int64).reshape(-1, 3)
    if field == "smooth-gradient":
        unit = positions / max((1 << depth) - 1, 1)
        ramp = np.column_stack(
            [
                unit[:, 0],
                0.5 * (unit[:, 1] + unit[:, 2]),
                1.0 - 0.5 * (unit[:, 0] + unit[:, 2]),
            ]
        )
        result: np.ndarray = np.rint(255.0 * ramp)
        return result
    if field == "smooth-wave":
        angle = np.pi * positions / max((1 << depth) - 1, 1)
        wave = np.column_stack(
            [
                np.sin(angle[:, 0]) * np.cos(angle[:, 1]),
                np.sin(angle[:, 1] + 0.5 * angle[:, 2]),
                np.cos(angle[:, 0]) * np.sin(angle[:, 2]),
            ]
        )
        result = np.rint(127.5 * (1.0 + wave))
        return result
    if field == "checker":
        parity = (positions // CHECKER_SIDE).sum(axis=1) % 2
        return CHECKER_COLOURS[parity]
    raise ValueError(f"unknown attribute field '{field}', expected one of {FIELDS}")


def synth_cloud(
    shape: str = "sphere",
    depth: int = 6,
    field: str = "smooth-gradient",
    seed: int = 0,
) -> VoxelCloud:
    """Voxelize a sampled surface and colour it.

    Args:
        shape: ``sphere``, ``plane`` or ``torus``, centred in the grid
        depth: Grid depth, at most 9
        field: Colour field, one of :data:`FIELDS`
        seed: Seed of the surface sampling

    Returns:
        A cloud with RGB attributes and the averaged analytic normals
    """
    if shape not in _SAMPLERS:
        raise ValueError(f"unknown shape '{shape}', expected one of {SHAPES}")
    if field not in FIELDS:
        raise ValueError(f"unknown attribute field '{field}', expected one of {FIELDS}")
    if not 1 <= depth <= MAX_DEPTH:
        raise LevelRangeError(f"synthetic depth {depth} outside [1, {MAX_DEPTH}]")

    rng = np.random.default_rng(seed)
    points, normals = _SAMPLERS[shape](rng, float(1 << depth))
    cloud = voxelize(points, None, depth, normals=normals)
    cloud = cloud.with_attributes(colour_field(field, cloud.positions, depth))
    logger.info(
        "Synthetic cloud generated",
        shape=shape,
        depth=depth,
        field=field,
        seed=seed,
        voxels=cloud.num_points,
    )
    return cloud
