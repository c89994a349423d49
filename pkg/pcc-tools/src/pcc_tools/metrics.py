"""Point-to-point geometry PSNR, luma PSNR and rate accounting."""

from typing import Optional

import numpy as np
from attribute_codec import EncodedAttributes, luma
from bv_shared import (
    DimensionMismatchError,
    EmptyCloudError,
    get_settings,
)
from geometry_codec import EncodedGeometry
from pydantic import BaseModel, Field
from scipy.spatial import cKDTree
from voxel_core import VoxelCloud

Y_PEAK = 255.0


def _psnr(mse: float, peak_squared: float, cap: Optional[float]) -> float:
    cap = get_settings().psnr_cap if cap is None else cap
    if mse <= 0:
        return cap
    return float(min(10.0 * np.log10(peak_squared / mse), cap))


def nearest_squared_distances(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Squared distance from every source voxel to its nearest target voxel."""
    distances, _ = cKDTree(target).query(source, k=1)
    # Voxel coordinates are integers, so are the squared distances.
    result: np.ndarray = np.rint(np.square(distances))
    return result


def psnr_d1(
    reference: VoxelCloud, test: VoxelCloud, *, cap: Optional[float] = None
) -> float:
    """Symmetric point-to-point PSNR with peak ``3 (2^d - 1)^2``.

    Each one-way error is the mean squared nearest-neighbour distance; the
    larger of the two is used.

    Raises:
        EmptyCloudError: If either cloud is empty
        DimensionMismatchError: If the depths differ
    """
    if reference.num_points == 0 or test.num_points == 0:
        raise EmptyCloudError("D1 PSNR needs two non-empty clouds")
    if reference.depth != test.depth:
        raise DimensionMismatchError(
            f"depths differ: {reference.depth} and {test.depth}"
        )
    forward = nearest_squared_distances(reference.positions, test.positions).mean()
    backward = nearest_squared_distances(test.positions, reference.positions).mean()
    peak_squared = 3.0 * float((1 << reference.depth) - 1) ** 2
    return _psnr(max(forward, backward), peak_squared, cap)


def _luma(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2 and values.shape[1] == 3:
        return luma(values)
    if values.ndim == 1 or (values.ndim == 2 and values.shape[1] == 1):
        return values.reshape(-1)
    raise DimensionMismatchError(f"expected RGB triplets or luma, got {values.shape}")


def psnr_y(
    reference: np.ndarray, decoded: np.ndarray, *, cap: Optional[float] = None
) -> float:
    """Luma PSNR with peak 255.

    Inputs are (n, 3) RGB rows or n luma values of the same voxels in the same
    order.

    Raises:
        DimensionMismatchError: If the lengths differ
        EmptyCloudError: If there are no values
    """
    ref, dec = _luma(reference), _luma(decoded)
    if len(ref) != len(dec):
        raise DimensionMismatchError(f"{len(ref)} reference and {len(dec)} values")
    if len(ref) == 0:
        raise EmptyCloudError("Y PSNR needs at least one value")
    return _psnr(float(np.mean(np.square(ref - dec))), Y_PEAK**2, cap)


class RdPoint(BaseModel):
    """One encode, decode and measure cycle of a sweep."""

    method: str = Field(description="Pruning method")
    params: str = Field(default="", description="Pruning parameter")
    qstep: float = Field(gt=0, description="Quantization stepsize")
    start_level: int = Field(ge=0, description="Requested geometry start level")
    reconstruction: str = Field(default="subdiv")
    bits_per_voxel: Optional[float] = Field(
        default=None, description="Container bits per input voxel"
    )
    psnr_d1: Optional[float] = Field(default=None, description="D1 PSNR in dB")
    bvs: Optional[int] = Field(default=None, description="Bezier volumes coded")
    error: Optional[str] = Field(default=None, description="Failure, if any")

    @property
    def pruning(self) -> str:
        return f"{self.method}:{self.params}" if self.params else self.method


class RateReport(BaseModel):
    """Stored bits of a container, overall and per section."""

    num_points: int = Field(ge=0)
    total_bits: int = Field(ge=0)
    section_bits: dict[str, int]

    @property
    def bits_per_point(self) -> float:
        return self.total_bits / self.num_points if self.num_points else 0.0

    def per_point(self) -> dict[str, float]:
        """Section bits divided by the voxel count."""
        if not self.num_points:
            return {name: 0.0 for name in self.section_bits}
        return {
            name: bits / self.num_points for name, bits in self.section_bits.items()
        }


def rate_report(encoded: EncodedGeometry | EncodedAttributes) -> RateReport:
    """Break a stream's size down by container section.

    Raises:
        DimensionMismatchError: If the sections do not add up to the container
    """
    if isinstance(encoded, EncodedGeometry):
        section_bits = dict(encoded.section_bits)
    else:
        section_bits = {name: 8 * n for name, n in encoded.section_bytes.items()}
    total = 8 * len(encoded.data)
    if sum(section_bits.values()) != total:
        raise DimensionMismatchError(
            f"sections hold {sum(section_bits.values())} of {total} bits"
        )
    return RateReport(
        num_points=encoded.num_points, total_bits=total, section_bits=section_bits
    )
