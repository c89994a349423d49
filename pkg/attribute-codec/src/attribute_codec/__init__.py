"""Region-adaptive attribute transforms over counting-measure spline spaces."""

__version__ = "0.1.0"

from .codec import (
    ATTRIBUTE_MAGIC,
    EncodedAttributes,
    bv_decode,
    bv_encode,
    geometry_fingerprint,
    smooth,
)
from .color import luma, rgb_to_yuv, to_u8, yuv_to_rgb
from .hierarchy import SplineHierarchy, build_hierarchy
from .hilbert import (
    BasisSpec,
    CountingMeasure,
    GramSystem,
    RankReduction,
    eval_basis,
    evaluate_spline,
    evaluation_matrix,
    gram_at_voxel_level,
    gram_recursion,
    inner_product,
    project,
    retain_full_rank,
    solve_normal_equations,
    two_scale_matrix,
)
from .raht import RahtCoefficients, raht_forward, raht_inverse, raht_weights
from .wavelets import (
    BvCoefficients,
    WaveletBasis,
    WaveletCascade,
    analyze,
    build_cascade,
    build_wavelet_basis,
    synthesize,
)

__all__ = [
    "ATTRIBUTE_MAGIC",
    "BasisSpec",
    "BvCoefficients",
    "CountingMeasure",
    "EncodedAttributes",
    "GramSystem",
    "RahtCoefficients",
    "RankReduction",
    "SplineHierarchy",
    "WaveletBasis",
    "WaveletCascade",
    "analyze",
    "build_cascade",
    "build_hierarchy",
    "build_wavelet_basis",
    "bv_decode",
    "bv_encode",
    "eval_basis",
    "evaluate_spline",
    "evaluation_matrix",
    "geometry_fingerprint",
    "gram_at_voxel_level",
    "gram_recursion",
    "inner_product",
    "luma",
    "project",
    "raht_forward",
    "raht_inverse",
    "raht_weights",
    "retain_full_rank",
    "rgb_to_yuv",
    "smooth",
    "solve_normal_equations",
    "synthesize",
    "to_u8",
    "two_scale_matrix",
    "yuv_to_rgb",
]
