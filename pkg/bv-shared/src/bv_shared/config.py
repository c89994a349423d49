"""Codec settings loaded from the environment."""

import os
from functools import lru_cache

from pydantic import BaseModel, Field, field_validator


class CodecSettings(BaseModel):
    """Tunable defaults shared by the encoders, decoders and sweeps.

    Command-line flags override these; library functions take explicit
    keyword arguments whose defaults come from here.
    """

    start_level: int = Field(
        default=2, ge=0, description="Geometry start level for the in-loop coder"
    )
    attribute_start_level: int = Field(
        default=0, ge=0, description="Coarsest level of the attribute cascade"
    )
    qstep: float = Field(default=1.0, gt=0, description="Quantization stepsize")
    compressor: str = Field(
        default="lzma", description="Byte codec applied to every container section"
    )
    normal_neighbors: int = Field(
        default=16, ge=3, description="Neighborhood size for normal estimation"
    )
    direct_solver_limit: int = Field(
        default=20000,
        gt=0,
        description="Largest Gram system solved by sparse direct factorization",
    )
    cg_tolerance: float = Field(
        default=1e-10, gt=0, description="Relative tolerance of conjugate gradients"
    )
    rank_tolerance: float = Field(
        default=1e-10, gt=0, description="Relative pivot threshold for rank reduction"
    )
    dense_rank_limit: int = Field(
        default=8000,
        gt=0,
        description="Largest Gram matrix rank-reduced by dense pivoted QR",
    )
    psnr_cap: float = Field(
        default=999.0, gt=0, description="PSNR reported for zero distortion"
    )

    @field_validator("compressor")
    @classmethod
    def _normalize_compressor(cls, value: str) -> str:
        return value.strip().lower()

    @classmethod
    def from_env(cls) -> "CodecSettings":
        """Build settings from ``BVPC_*`` environment variables."""
        env_map = {
            "start_level": "BVPC_START_LEVEL",
            "attribute_start_level": "BVPC_ATTRIBUTE_START_LEVEL",
            "qstep": "BVPC_QSTEP",
            "compressor": "BVPC_COMPRESSOR",
            "normal_neighbors": "BVPC_NORMAL_NEIGHBORS",
            "direct_solver_limit": "BVPC_DIRECT_SOLVER_LIMIT",
            "cg_tolerance": "BVPC_CG_TOLERANCE",
            "rank_tolerance": "BVPC_RANK_TOLERANCE",
            "dense_rank_limit": "BVPC_DENSE_RANK_LIMIT",
            "psnr_cap": "BVPC_PSNR_CAP",
        }
        values = {
            field: os.environ[name]
            for field, name in env_map.items()
            if name in os.environ
        }
        return cls.model_validate(values)


@lru_cache(maxsize=1)
def get_settings() -> CodecSettings:
    """Get the process-wide settings instance."""
    return CodecSettings.from_env()
