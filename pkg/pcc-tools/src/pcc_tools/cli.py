"""The ``bvpc`` command line.

Every command writes one JSON object per line on standard output and logs to
standard error. Exit codes: 0 success, 1 unexpected failure, 2 usage error,
3 file error, 4 format or decode error, 5 invalid or conflicting options.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from attribute_codec import bv_decode, bv_encode
from bv_shared import (
    CodecError,
    LevelRangeError,
    configure_logging,
    log_duration,
    log_error,
)
from geometry_codec import decode_geometry, encode_geometry
from voxel_core import VoxelCloud

from .metrics import psnr_d1, psnr_y, rate_report
from .ply import read_ply, write_ply
from .sweeps import (
    compaction_frame,
    energy_compaction_sweep,
    rd_frame,
    rd_grid,
    rd_sweep,
    write_csv,
)
from .synth import FIELDS, SHAPES, synth_cloud

logger = configure_logging("pcc-tools")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_CODEC = 4
EXIT_OPTIONS = 5

Record = dict[str, Any]
Handler = Callable[[argparse.Namespace], list[Record]]


class OptionError(ValueError):
    """Options that parse but cannot be used together."""


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _emit(record: Record) -> None:
    print(json.dumps(record, sort_keys=True, default=_json_default))


def _encode_geometry(args: argparse.Namespace) -> list[Record]:
    cloud = read_ply(args.input, args.depth, fit=args.fit)
    encoded = encode_geometry(
        cloud,
        start_level=args.start_level,
        qstep=args.qstep,
        pruning=args.prune,
        compressor=args.compressor,
    )
    Path(args.output).write_bytes(encoded.data)
    report = rate_report(encoded)
    return [
        {
            "command": "encode-geometry",
            "output": args.output,
            "depth": cloud.depth,
            "points": cloud.num_points,
            "bytes": len(encoded.data),
            "bits_per_point": report.bits_per_point,
            "pruning": str(encoded.pruning),
            "start_level": encoded.start_level,
            "bvs": encoded.pruned.num_bvs,
            "section_bits": report.section_bits,
        }
    ]


def _decode_geometry(args: argparse.Namespace) -> list[Record]:
    decoded = decode_geometry(
        Path(args.input).read_bytes(), reconstruction=args.reconstruct
    )
    write_ply(decoded, args.output, text=args.ascii)
    return [
        {
            "command": "decode-geometry",
            "output": args.output,
            "depth": decoded.depth,
            "points": decoded.num_points,
            "reconstruction": args.reconstruct,
        }
    ]


def _encode_attributes(args: argparse.Namespace) -> list[Record]:
    cloud = read_ply(args.input, args.depth, fit=args.fit)
    encoded = bv_encode(
        cloud,
        args.start_level,
        args.qstep,
        order=args.order,
        compressor=args.compressor,
    )
    Path(args.output).write_bytes(encoded.data)
    report = rate_report(encoded)
    return [
        {
            "command": "encode-attributes",
            "output": args.output,
            "points": cloud.num_points,
            "order": args.order,
            "bytes": len(encoded.data),
            "bits_per_point": report.bits_per_point,
            "nonzero": encoded.nonzero_coefficients,
            "section_bits": report.section_bits,
        }
    ]


def _decode_attributes(args: argparse.Namespace) -> list[Record]:
    geometry = read_ply(args.geometry, args.depth, fit=args.fit)
    colours = bv_decode(Path(args.input).read_bytes(), geometry)
    write_ply(geometry.with_attributes(colours), args.output, text=args.ascii)
    return [
        {
            "command": "decode-attributes",
            "output": args.output,
            "points": geometry.num_points,
        }
    ]


def _evaluate(args: argparse.Namespace) -> list[Record]:
    reference = read_ply(args.ref, args.depth)
    test = read_ply(args.test, reference.depth)
    if args.metric == "d1":
        value = psnr_d1(reference, test)
    else:
        if not np.array_equal(reference.positions, test.positions):
            raise OptionError("Y PSNR needs both files on the same voxels")
        value = psnr_y(reference.attributes, test.attributes)
    return [
        {
            "command": "evaluate",
            "metric": args.metric,
            "psnr": value,
            "reference_points": reference.num_points,
            "test_points": test.num_points,
        }
    ]


def _sweep_cloud(args: argparse.Namespace) -> VoxelCloud:
    if args.input and args.shape:
        raise OptionError("--in and --shape are mutually exclusive")
    if args.input:
        return read_ply(args.input, args.depth, fit=args.fit)
    return synth_cloud(args.shape or "sphere", args.depth or 6, args.field, args.seed)


def _sweep(args: argparse.Namespace) -> list[Record]:
    if args.mode == "compaction" and (args.prune or args.qstep):
        raise OptionError("--prune and --qstep apply to rate-distortion sweeps only")
    if args.mode == "rd" and args.transform != "both":
        raise OptionError("--transform applies to compaction sweeps only")
    cloud = _sweep_cloud(args)
    if args.mode == "compaction":
        transforms = ["raht", "bv"] if args.transform == "both" else [args.transform]
        points = [
            point
            for transform in transforms
            for point in energy_compaction_sweep(cloud, transform)
        ]
        frame = compaction_frame(points)
    else:
        prunings = args.prune or [
            f"fixed:{level}" for level in range(3, min(8, cloud.depth) + 1)
        ]
        grid = rd_grid(
            prunings,
            args.qstep or [1.0],
            start_level=args.start_level,
            reconstruction=args.reconstruct,
        )
        frame = rd_frame(rd_sweep(cloud, grid))
    write_csv(frame, args.output)
    records: list[Record] = [
        {"command": "sweep", "mode": args.mode, **row}
        for row in frame.astype(object).where(frame.notna(), None).to_dict("records")
    ]
    records.append(
        {
            "command": "sweep",
            "mode": args.mode,
            "output": args.output,
            "rows": len(frame),
            "points": cloud.num_points,
        }
    )
    return records


def _synth(args: argparse.Namespace) -> list[Record]:
    cloud = synth_cloud(args.shape, args.depth, args.field, args.seed)
    write_ply(cloud, args.output, text=args.ascii)
    return [
        {
            "command": "synth",
            "output": args.output,
            "shape": args.shape,
            "depth": args.depth,
            "field": args.field,
            "seed": args.seed,
            "points": cloud.num_points,
        }
    ]


def _add_ply_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--depth",
        type=int,
        default=None,
        help="Grid depth (default: from the largest voxel coordinate)",
    )
    parser.add_argument(
        "--fit",
        action="store_true",
        help="Scale the bounding cube of the points onto the grid (needs --depth)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bvpc",
        description="Bezier volume point cloud codec",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  bvpc synth --shape sphere --depth 6 --out sphere.ply
  bvpc encode-geometry --in sphere.ply --out sphere.bvpc --prune fixed:4
  bvpc decode-geometry --in sphere.bvpc --out decoded.ply --reconstruct raycast:2
  bvpc evaluate --ref sphere.ply --test decoded.ply --metric d1
  bvpc sweep --mode rd --shape sphere --depth 7 --out rd.csv
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("encode-geometry", help="Encode voxel positions")
    command.add_argument("--in", dest="input", required=True, help="Input PLY")
    command.add_argument("--out", dest="output", required=True, help="Output .bvpc")
    _add_ply_input(command)
    command.add_argument("--start-level", type=int, default=None)
    command.add_argument("--qstep", type=float, default=None)
    command.add_argument(
        "--prune",
        default="none",
        help="none, fixed:L, zero:t, dist:e or rd:lambda (default: none)",
    )
    command.add_argument("--compressor", default=None, help="Section byte codec")
    command.set_defaults(handler=_encode_geometry)

    command = commands.add_parser("decode-geometry", help="Decode voxel positions")
    command.add_argument("--in", dest="input", required=True, help="Input .bvpc")
    command.add_argument("--out", dest="output", required=True, help="Output PLY")
    command.add_argument(
        "--reconstruct",
        default="subdiv",
        help="subdiv or raycast:r with r in voxels (default: subdiv)",
    )
    command.add_argument("--ascii", action="store_true", help="Write ascii PLY")
    command.set_defaults(handler=_decode_geometry)

    command = commands.add_parser("encode-attributes", help="Encode voxel colours")
    command.add_argument("--in", dest="input", required=True, help="Input PLY")
    command.add_argument("--out", dest="output", required=True, help="Output .bvat")
    _add_ply_input(command)
    command.add_argument("--order", type=int, choices=(1, 2), default=2)
    command.add_argument("--qstep", type=float, default=None)
    command.add_argument("--start-level", type=int, default=None)
    command.add_argument("--compressor", default=None, help="Section byte codec")
    command.set_defaults(handler=_encode_attributes)

    command = commands.add_parser("decode-attributes", help="Decode voxel colours")
    command.add_argument("--in", dest="input", required=True, help="Input .bvat")
    command.add_argument(
        "--geometry", required=True, help="PLY holding the decoded voxels"
    )
    command.add_argument("--out", dest="output", required=True, help="Output PLY")
    _add_ply_input(command)
    command.add_argument("--ascii", action="store_true", help="Write ascii PLY")
    command.set_defaults(handler=_decode_attributes)

    command = commands.add_parser("evaluate", help="Compare two PLY files")
    command.add_argument("--ref", required=True, help="Reference PLY")
    command.add_argument("--test", required=True, help="Decoded PLY")
    command.add_argument("--metric", choices=("d1", "y"), default="d1")
    command.add_argument("--depth", type=int, default=None, help="Grid depth")
    command.set_defaults(handler=_evaluate)

    command = commands.add_parser("sweep", help="Write a sweep table as CSV")
    command.add_argument("--mode", choices=("compaction", "rd"), required=True)
    command.add_argument("--out", dest="output", required=True, help="Output CSV")
    command.add_argument("--in", dest="input", default=None, help="Input PLY")
    _add_ply_input(command)
    command.add_argument("--shape", choices=SHAPES, default=None)
    command.add_argument("--field", choices=FIELDS, default="smooth-gradient")
    command.add_argument("--seed", type=int, default=0)
    command.add_argument(
        "--transform", choices=("raht", "bv", "both"), default="both"
    )
    command.add_argument(
        "--prune", action="append", default=None, help="Repeat for several points"
    )
    command.add_argument(
        "--qstep", type=float, action="append", default=None, help="Repeatable"
    )
    command.add_argument("--start-level", type=int, default=None)
    command.add_argument("--reconstruct", default="subdiv")
    command.set_defaults(handler=_sweep)

    command = commands.add_parser("synth", help="Write a synthetic cloud")
    command.add_argument("--shape", choices=SHAPES, default="sphere")
    command.add_argument("--depth", type=int, default=6)
    command.add_argument("--field", choices=FIELDS, default="smooth-gradient")
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("--out", dest="output", required=True, help="Output PLY")
    command.add_argument("--ascii", action="store_true", help="Write ascii PLY")
    command.set_defaults(handler=_synth)
    return parser


def _fail(code: int, exc: BaseException, command: Optional[str]) -> int:
    print(f"bvpc: error: {exc}", file=sys.stderr)
    if isinstance(exc, Exception):
        log_error(logger, exc, command=command, exit_code=code)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    handler: Handler = args.handler
    try:
        with log_duration(logger, "command", command=args.command):
            records = handler(args)
    except (OptionError, LevelRangeError) as exc:
        return _fail(EXIT_OPTIONS, exc, args.command)
    except OSError as exc:
        return _fail(EXIT_FILE, exc, args.command)
    except CodecError as exc:
        return _fail(EXIT_CODEC, exc, args.command)
    except ValueError as exc:
        return _fail(EXIT_OPTIONS, exc, args.command)
    except Exception as exc:
        return _fail(EXIT_FAILURE, exc, args.command)

    for record in records:
        _emit(record)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
