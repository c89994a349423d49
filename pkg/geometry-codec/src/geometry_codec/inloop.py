"""Predictive coding of control points with quantization in the loop.

Level by level, every corner that is not also a corner of the parent level is
predicted by tri-linear interpolation of the reconstructed parent corners and
only the quantized residual is kept. Since the prediction uses the decoder's
values, every reconstructed control point is within half a step of its
signed distance.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from bv_shared import (
    DimensionMismatchError,
    LevelRangeError,
    configure_logging,
    log_stage,
)
from entropy_coding import QuantizerSpec, dequantize, quantize
from voxel_core import CORNER_OFFSETS, CornerSet, block_corners

from .sdf import SdfField

logger = configure_logging("geometry-codec")

# Interpolation weights along one axis for child offsets 0, 1 and 2.
_AXIS_WEIGHTS = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])


class CornerRole(Enum):
    """Position of a child-only corner on its parent block."""

    EDGE = 1
    FACE = 2
    CENTER = 3

    @classmethod
    def from_offset(cls, offset: Sequence[int]) -> "CornerRole":
        """Role from an offset in half-block units, each entry in {0, 1, 2}.

        Raises:
            ValueError: If the offset is a parent corner or leaves the block
        """
        values = np.asarray(offset, dtype=np.int64)
        if values.shape != (3,) or np.any((values < 0) | (values > 2)):
            raise ValueError(f"child offset {offset} is not on the parent block")
        odd = int(np.count_nonzero(values == 1))
        if odd == 0:
            raise ValueError(f"child offset {offset} coincides with a parent corner")
        return cls(odd)


def predict_child(parent_values: np.ndarray, offset: Sequence[int]) -> np.ndarray:
    """Tri-linear prediction of a child-only corner from its parent block.

    Args:
        parent_values: (..., 8) parent corner values in corner order
        offset: Child corner in half-block units, e.g. (1, 1, 1) for the center

    Returns:
        The mean of the 2, 4 or 8 parent corners spanning the child corner
    """
    CornerRole.from_offset(offset)
    weights = np.ones(8)
    for axis in range(3):
        weights *= _AXIS_WEIGHTS[offset[axis]][CORNER_OFFSETS[:, axis]]
    values = np.asarray(parent_values, dtype=np.float64)
    if values.shape[-1] != 8:
        raise DimensionMismatchError("a parent block has 8 corner values")
    result: np.ndarray = values @ weights
    return result


def child_only(shifts: np.ndarray) -> np.ndarray:
    """Mask of corners with an odd coordinate, absent from the parent level."""
    return np.any(np.asarray(shifts) & 1, axis=1)


def predict_from_parent(
    parent: CornerSet, parent_values: np.ndarray, shifts: np.ndarray
) -> np.ndarray:
    """Interpolate parent-level values at child-level corner shifts.

    Even corners receive the parent value unchanged.

    Raises:
        DimensionMismatchError: If a spanning parent corner is not in ``parent``
    """
    low = shifts >> 1
    high = (shifts + 1) >> 1
    total = np.zeros(len(shifts))
    for offset in CORNER_OFFSETS:
        index = parent.lookup(np.where(offset == 1, high, low))
        if np.any(index < 0):
            raise DimensionMismatchError("child corner outside the parent blocks")
        total += parent_values[index]
    prediction: np.ndarray = total / 8.0
    return prediction


@dataclass(frozen=True, eq=False)
class GeometryWavelets:
    """Quantized control points of consecutive cubic levels.

    Attributes:
        start_level: Level of the directly quantized controls
        qstep: Quantization stepsize
        corners: Coded corners per level, starting at ``start_level``
        start_q: Quantized controls of the start level
        residual_q: Per level above the start, quantized residuals of the
            child-only corners in corner order
        reconstruction: Per level, reconstructed control point of every corner
    """

    start_level: int
    qstep: float
    corners: list[CornerSet]
    start_q: np.ndarray
    residual_q: list[np.ndarray]
    reconstruction: list[np.ndarray]

    @classmethod
    def empty(cls, start_level: int, qstep: float) -> "GeometryWavelets":
        """No coded level, as for a tree whose leaves are all voxels."""
        return cls(start_level, qstep, [], np.zeros(0, dtype=np.int64), [], [])

    @property
    def num_levels(self) -> int:
        return len(self.corners)

    @property
    def last_level(self) -> int:
        """Deepest coded level, ``start_level - 1`` if nothing is coded."""
        return self.start_level + self.num_levels - 1

    @property
    def num_coefficients(self) -> int:
        return len(self.start_q) + sum(len(q) for q in self.residual_q)

    @property
    def nonzero_coefficients(self) -> int:
        counts = [np.count_nonzero(self.start_q)]
        counts += [np.count_nonzero(q) for q in self.residual_q]
        return int(sum(counts))

    def index(self, level: int) -> int:
        """Position of a cubic level in the per-level lists."""
        if not self.start_level <= level <= self.last_level:
            raise LevelRangeError(
                f"level {level} not coded (levels {self.start_level}"
                f"..{self.last_level})"
            )
        return level - self.start_level

    def corner_indices(self, level: int) -> np.ndarray:
        """Quantized index of every corner of a level, 0 on parent corners."""
        i = self.index(level)
        if i == 0:
            return self.start_q
        full = np.zeros(len(self.corners[i]), dtype=np.int64)
        full[child_only(self.corners[i].shifts)] = self.residual_q[i - 1]
        return full


def _coded_blocks(
    sdf: SdfField, start_level: int, blocks: Optional[Sequence[np.ndarray]]
) -> Sequence[np.ndarray]:
    if blocks is None:
        return sdf.blocks[start_level:]
    if start_level + len(blocks) - 1 > sdf.depth:
        raise LevelRangeError("more coded levels than the octree has")
    return blocks


def encode_in_loop(
    sdf: SdfField,
    start_level: int,
    qstep: float,
    blocks: Optional[Sequence[np.ndarray]] = None,
) -> GeometryWavelets:
    """Quantize start-level controls and the residuals of finer levels.

    Args:
        sdf: Signed distances on every corner of the octree
        start_level: Level whose controls are quantized directly
        qstep: Quantization stepsize
        blocks: Per level from ``start_level``, shifts of the blocks whose
            corners are coded, each level's blocks children of the previous
            level's; all occupied blocks down to the voxels when omitted

    Returns:
        Quantized coefficients and the decoder's reconstruction
    """
    sdf.check_level(start_level)
    spec = QuantizerSpec(qstep)
    coded = _coded_blocks(sdf, start_level, blocks)
    corners = [
        block_corners(shifts, 3 * (start_level + i), sdf.depth)
        for i, shifts in enumerate(coded)
        if len(shifts)
    ]
    if not corners:
        return GeometryWavelets.empty(start_level, qstep)

    start_q = quantize(sdf.sample(start_level, corners[0].shifts), spec)
    reconstruction = [dequantize(start_q, spec)]
    residual_q = []
    for i in range(1, len(corners)):
        level = start_level + i
        shifts = corners[i].shifts
        values = predict_from_parent(corners[i - 1], reconstruction[-1], shifts)
        odd = child_only(shifts)
        residual = sdf.sample(level, shifts[odd]) - values[odd]
        q = quantize(residual, spec)
        values[odd] += dequantize(q, spec)
        residual_q.append(q)
        reconstruction.append(values)
        log_stage(
            logger,
            "in-loop level",
            level=level,
            residuals=len(q),
            nonzero=int(np.count_nonzero(q)),
        )
    return GeometryWavelets(
        start_level, qstep, corners, start_q, residual_q, reconstruction
    )


def decode_in_loop(
    corners: list[CornerSet],
    start_level: int,
    qstep: float,
    start_q: np.ndarray,
    residual_q: list[np.ndarray],
) -> GeometryWavelets:
    """Rebuild the control points from the quantized coefficients.

    Raises:
        DimensionMismatchError: If a coefficient count disagrees with the corners
    """
    spec = QuantizerSpec(qstep)
    if len(residual_q) != max(len(corners) - 1, 0):
        raise DimensionMismatchError(
            f"{len(residual_q)} residual levels for {len(corners)} coded levels"
        )
    if not corners:
        if len(start_q):
            raise DimensionMismatchError("start controls without coded corners")
        return GeometryWavelets.empty(start_level, qstep)
    if len(start_q) != len(corners[0]):
        raise DimensionMismatchError(
            f"{len(start_q)} start controls for {len(corners[0])} corners"
        )

    reconstruction = [dequantize(np.asarray(start_q, dtype=np.int64), spec)]
    for i in range(1, len(corners)):
        shifts = corners[i].shifts
        values = predict_from_parent(corners[i - 1], reconstruction[-1], shifts)
        odd = child_only(shifts)
        if np.count_nonzero(odd) != len(residual_q[i - 1]):
            raise DimensionMismatchError(
                f"level {start_level + i} has {np.count_nonzero(odd)} child-only "
                f"corners, {len(residual_q[i - 1])} residuals"
            )
        values[odd] += dequantize(residual_q[i - 1], spec)
        reconstruction.append(values)
    return GeometryWavelets(
        start_level, qstep, corners, start_q, residual_q, reconstruction
    )
