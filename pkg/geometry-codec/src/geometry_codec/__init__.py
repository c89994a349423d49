"""Geometry coding of voxelized point clouds with Bezier volumes."""

__version__ = "0.1.0"

from .bitstream import (
    GEOMETRY_MAGIC,
    SECTION_NAMES,
    BvBatch,
    GeometryStream,
    assemble_bitstream,
    parse_bitstream,
)
from .codec import (
    EncodedGeometry,
    decode_geometry,
    encode_geometry,
    parse_reconstruction,
    prune_octree,
)
from .inloop import (
    CornerRole,
    GeometryWavelets,
    child_only,
    decode_in_loop,
    encode_in_loop,
    predict_child,
    predict_from_parent,
)
from .normals import NormalEstimate, estimate_normals, orient_normals
from .pruning import (
    PrunedOctree,
    PruningSpec,
    block_errors,
    prune_distortion,
    prune_fixed,
    prune_rd,
    prune_zero_wavelets,
    rd_prune_tree,
)
from .sdf import SdfField, compute_sdf
from .surface import (
    BezierVolume,
    crossing_mask,
    dominant_axis,
    gradient,
    has_c_crossing,
    raycast,
    raycast_blocks,
    subdivide,
    subdivide_blocks,
    trilinear,
    unique_voxels,
)

__all__ = [
    "BezierVolume",
    "BvBatch",
    "CornerRole",
    "EncodedGeometry",
    "GEOMETRY_MAGIC",
    "GeometryStream",
    "GeometryWavelets",
    "NormalEstimate",
    "PrunedOctree",
    "PruningSpec",
    "SECTION_NAMES",
    "SdfField",
    "assemble_bitstream",
    "block_errors",
    "child_only",
    "compute_sdf",
    "crossing_mask",
    "decode_geometry",
    "decode_in_loop",
    "dominant_axis",
    "encode_geometry",
    "encode_in_loop",
    "estimate_normals",
    "gradient",
    "has_c_crossing",
    "orient_normals",
    "parse_bitstream",
    "parse_reconstruction",
    "predict_child",
    "predict_from_parent",
    "prune_distortion",
    "prune_fixed",
    "prune_octree",
    "prune_rd",
    "prune_zero_wavelets",
    "raycast",
    "raycast_blocks",
    "rd_prune_tree",
    "subdivide",
    "subdivide_blocks",
    "trilinear",
    "unique_voxels",
]
