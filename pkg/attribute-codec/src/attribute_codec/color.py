"""BT.709 full-range colour conversion with chroma centred on 128."""

import numpy as np
from bv_shared import DimensionMismatchError

KR = 0.2126
KB = 0.0722
KG = 1.0 - KR - KB
CHROMA_OFFSET = 128.0

RGB_TO_YUV = np.array(
    [
        [KR, KG, KB],
        [-KR / (2 * (1 - KB)), -KG / (2 * (1 - KB)), 0.5],
        [0.5, -KG / (2 * (1 - KR)), -KB / (2 * (1 - KR))],
    ]
)
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)
_OFFSET = np.array([0.0, CHROMA_OFFSET, CHROMA_OFFSET])


def _check_triplets(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 3:
        raise DimensionMismatchError(f"expected (n, 3) colours, got {values.shape}")
    return values


def rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    """Convert (n, 3) RGB in [0, 255] to YUV with U and V offset by 128."""
    return _check_triplets(rgb) @ RGB_TO_YUV.T + _OFFSET


def yuv_to_rgb(yuv: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_yuv`; the result is not clipped."""
    return (_check_triplets(yuv) - _OFFSET) @ YUV_TO_RGB.T


def luma(rgb: np.ndarray) -> np.ndarray:
    """Y channel of (n, 3) RGB colours."""
    return _check_triplets(rgb) @ RGB_TO_YUV[0]


def to_u8(values: np.ndarray) -> np.ndarray:
    """Round and clip to the 8-bit range."""
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)
