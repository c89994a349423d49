"""Energy-compaction and rate-distortion sweeps, tabulated with pandas."""

import itertools
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from attribute_codec import build_hierarchy, luma
from bv_shared import (
    CodecError,
    DimensionMismatchError,
    configure_logging,
    get_settings,
    log_duration,
    log_error,
)
from geometry_codec import (
    PruningSpec,
    decode_geometry,
    encode_geometry,
    parse_reconstruction,
)
from pydantic import BaseModel, ConfigDict, Field, field_validator
from voxel_core import VoxelCloud, build_octree

from .metrics import RdPoint, psnr_d1, psnr_y

logger = configure_logging("pcc-tools")

RD_COLUMNS = [
    "method",
    "params",
    "qstep",
    "start_level",
    "reconstruction",
    "bits_per_voxel",
    "psnr_d1",
    "bvs",
    "error",
]
COMPACTION_COLUMNS = ["transform", "level", "nonzero", "psnr_y"]


class CompactionPoint(BaseModel):
    """Quality of the level-L approximation and the coefficients it keeps."""

    transform: str = Field(pattern="^(raht|bv)$", description="Transform family")
    level: int = Field(ge=0, description="Octree level of the retained space")
    nonzero: int = Field(ge=0, description="Dimension of the retained space")
    psnr_y: float = Field(description="Luma PSNR of the approximation in dB")


def _luma_channel(cloud: VoxelCloud) -> np.ndarray:
    if cloud.num_channels == 0:
        raise DimensionMismatchError("energy compaction needs attributes")
    if cloud.num_channels == 3:
        return luma(cloud.attributes)
    result: np.ndarray = cloud.attributes[:, 0].copy()
    return result


def energy_compaction_sweep(
    cloud: VoxelCloud,
    transform: str = "bv",
    levels: Optional[Sequence[int]] = None,
) -> list[CompactionPoint]:
    """Luma PSNR against retained coefficients for octree levels L.

    Dropping every detail at levels L and above leaves the least-squares fit
    of the luma in the level-L spline space, whose dimension is the count of
    retained coefficients. ``raht`` uses block indicators, ``bv`` tri-linear
    hats.

    Args:
        cloud: Cloud with RGB (or single-channel) attributes
        transform: ``raht`` or ``bv``
        levels: Octree levels to visit, 0..d by default
    """
    if transform not in ("raht", "bv"):
        raise ValueError(f"unknown transform '{transform}', expected raht or bv")
    order = 1 if transform == "raht" else 2
    levels = list(range(cloud.depth + 1)) if levels is None else sorted(levels)
    values = _luma_channel(cloud)

    octree = build_octree(cloud)
    coarsest = 3 * levels[0] if order == 1 else levels[0]
    hierarchy = build_hierarchy(octree, order, coarsest=coarsest)
    points = []
    for level in levels:
        index = hierarchy.level_of_cube(level)
        if index == hierarchy.top:
            approximation = values
        else:
            approximation = hierarchy.project_values(index, values[:, None])
        point = CompactionPoint(
            transform=transform,
            level=level,
            nonzero=hierarchy.dimension(index),
            psnr_y=psnr_y(values, approximation.reshape(-1)),
        )
        logger.debug(
            "Compaction point",
            transform=transform,
            level=level,
            nonzero=point.nonzero,
            psnr_y=round(point.psnr_y, 3),
        )
        points.append(point)
    return points


class RdConfig(BaseModel):
    """Codec parameters of one rate-distortion run."""

    model_config = ConfigDict(frozen=True)

    pruning: str = Field(default="fixed:6", description="Pruning, method:value")
    qstep: float = Field(default=1.0, gt=0, description="Quantization stepsize")
    start_level: int = Field(default=2, ge=0, description="Geometry start level")
    reconstruction: str = Field(default="subdiv", description="subdiv or raycast:r")
    compressor: Optional[str] = Field(default=None, description="Byte codec")

    @field_validator("pruning")
    @classmethod
    def _canonical_pruning(cls, value: str) -> str:
        return str(PruningSpec.parse(value))

    @field_validator("reconstruction")
    @classmethod
    def _known_reconstruction(cls, value: str) -> str:
        parse_reconstruction(value)
        return value.strip().lower()


def rd_grid(
    prunings: Sequence[str],
    qsteps: Sequence[float] = (1.0,),
    *,
    start_level: Optional[int] = None,
    reconstruction: str = "subdiv",
) -> list[RdConfig]:
    """Every combination of pruning and stepsize, pruning varying slowest."""
    start = get_settings().start_level if start_level is None else start_level
    return [
        RdConfig(
            pruning=pruning,
            qstep=qstep,
            start_level=start,
            reconstruction=reconstruction,
        )
        for pruning, qstep in itertools.product(prunings, qsteps)
    ]


def _rd_run(cloud: VoxelCloud, config: RdConfig) -> RdPoint:
    spec = PruningSpec.parse(config.pruning)
    method, _, params = str(spec).partition(":")
    base: dict[str, Any] = {
        "method": method,
        "params": params,
        "qstep": config.qstep,
        "start_level": config.start_level,
        "reconstruction": config.reconstruction,
    }
    try:
        with log_duration(logger, "rd point", pruning=str(spec), qstep=config.qstep):
            encoded = encode_geometry(
                cloud,
                start_level=min(config.start_level, cloud.depth),
                qstep=config.qstep,
                pruning=spec,
                compressor=config.compressor,
            )
            decoded = decode_geometry(
                encoded.data, reconstruction=config.reconstruction
            )
        return RdPoint(
            **base,
            bits_per_voxel=encoded.bits_per_point,
            psnr_d1=psnr_d1(cloud, decoded),
            bvs=encoded.pruned.num_bvs,
        )
    except (CodecError, ValueError) as exc:
        log_error(logger, exc, stage="rd sweep", pruning=str(spec))
        return RdPoint(**base, error=f"{type(exc).__name__}: {exc}")


def rd_sweep(cloud: VoxelCloud, grid: Sequence[RdConfig]) -> list[RdPoint]:
    """Encode, decode and measure the cloud once per configuration.

    Failures are recorded in the point's ``error`` field instead of raised.

    Raises:
        ValueError: If the grid is empty
    """
    if not grid:
        raise ValueError("rate-distortion grid is empty")
    points = [_rd_run(cloud, config) for config in grid]
    logger.info(
        "Rate-distortion sweep finished",
        points=len(points),
        failed=sum(point.error is not None for point in points),
    )
    return points


def rd_frame(points: Sequence[RdPoint]) -> pd.DataFrame:
    """One row per point in :data:`RD_COLUMNS` order."""
    rows = [point.model_dump() for point in points]
    return pd.DataFrame(rows, columns=RD_COLUMNS)


def compaction_frame(points: Sequence[CompactionPoint]) -> pd.DataFrame:
    """One row per point in :data:`COMPACTION_COLUMNS` order."""
    rows = [point.model_dump() for point in points]
    return pd.DataFrame(rows, columns=COMPACTION_COLUMNS)


def write_csv(frame: pd.DataFrame, path: str | Path) -> None:
    frame.to_csv(path, index=False)
    logger.info("Sweep table written", path=str(path), rows=len(frame))
