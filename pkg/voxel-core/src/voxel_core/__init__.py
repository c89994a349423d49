"""Voxelization, Morton ordering and sparse voxel octrees."""

__version__ = "0.1.0"

from .cloud import VoxelCloud, voxelize
from .morton import (
    MAX_DEPTH,
    morton_decode,
    morton_decode_array,
    morton_encode,
    morton_encode_array,
)
from .octree import (
    CORNER_OFFSETS,
    CornerSet,
    OctreeLevels,
    axis_bits,
    block_corners,
    build_octree,
    corner_codes,
    cube_corners,
    lookup_codes,
    split_axis,
    unique_corners,
)

__all__ = [
    "CORNER_OFFSETS",
    "CornerSet",
    "MAX_DEPTH",
    "OctreeLevels",
    "VoxelCloud",
    "axis_bits",
    "block_corners",
    "build_octree",
    "corner_codes",
    "cube_corners",
    "lookup_codes",
    "morton_decode",
    "morton_decode_array",
    "morton_encode",
    "morton_encode_array",
    "split_axis",
    "unique_corners",
    "voxelize",
]
