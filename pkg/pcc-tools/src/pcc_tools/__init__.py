"""PLY I/O, synthetic clouds, quality metrics and sweeps for the codec."""

__version__ = "0.1.0"

from .metrics import (
    RateReport,
    RdPoint,
    nearest_squared_distances,
    psnr_d1,
    psnr_y,
    rate_report,
)
from .ply import PlyDocument, read_document, read_ply, write_document, write_ply
from .sweeps import (
    COMPACTION_COLUMNS,
    RD_COLUMNS,
    CompactionPoint,
    RdConfig,
    compaction_frame,
    energy_compaction_sweep,
    rd_frame,
    rd_grid,
    rd_sweep,
    write_csv,
)
from .synth import FIELDS, SHAPES, colour_field, synth_cloud

__all__ = [
    "COMPACTION_COLUMNS",
    "CompactionPoint",
    "FIELDS",
    "PlyDocument",
    "RD_COLUMNS",
    "RateReport",
    "RdConfig",
    "RdPoint",
    "SHAPES",
    "colour_field",
    "compaction_frame",
    "energy_compaction_sweep",
    "nearest_squared_distances",
    "psnr_d1",
    "psnr_y",
    "rate_report",
    "rd_frame",
    "rd_grid",
    "rd_sweep",
    "read_document",
    "read_ply",
    "synth_cloud",
    "write_csv",
    "write_document",
    "write_ply",
]
