"""Morton (Z-order) codes over the integer voxel grid.

Bits are interleaved most significant first as ``x1 y1 z1 x2 y2 z2 ...``, so the
x bit is the highest bit of every triple and a length-``l`` prefix of a code
identifies the level-``l`` block of the binary x→y→z split tree.
"""

from typing import Sequence

import numpy as np
from bv_shared import LevelRangeError

# Corner codes use depth + 1 bits per axis and must fit a signed 64-bit integer.
MAX_DEPTH = 20


def _check_depth(depth: int) -> None:
    if not 0 <= depth <= MAX_DEPTH:
        raise LevelRangeError(f"depth {depth} outside [0, {MAX_DEPTH}]")


def morton_encode(pos: Sequence[int], depth: int) -> int:
    """Interleave the bits of one integer triple.

    Args:
        pos: Integer coordinates (x, y, z), each in [0, 2^depth)
        depth: Bits per coordinate

    Returns:
        The 3*depth-bit Morton code

    Examples:
        >>> morton_encode((3, 1, 2), 2)
        46
    """
    _check_depth(depth)
    x, y, z = (int(c) for c in pos)
    limit = 1 << depth
    if not (0 <= x < limit and 0 <= y < limit and 0 <= z < limit):
        raise LevelRangeError(f"coordinate {(x, y, z)} outside [0, {limit})^3")
    code = 0
    for bit in range(depth - 1, -1, -1):
        code = (code << 3) | (((x >> bit) & 1) << 2) | (((y >> bit) & 1) << 1)
        code |= (z >> bit) & 1
    return code


def morton_decode(code: int, depth: int) -> tuple[int, int, int]:
    """Inverse of :func:`morton_encode`."""
    _check_depth(depth)
    if not 0 <= code < (1 << (3 * depth)):
        raise LevelRangeError(f"code {code} needs more than {3 * depth} bits")
    x = y = z = 0
    for bit in range(depth):
        triple = (code >> (3 * bit)) & 0b111
        x |= ((triple >> 2) & 1) << bit
        y |= ((triple >> 1) & 1) << bit
        z |= (triple & 1) << bit
    return x, y, z


def morton_encode_array(positions: np.ndarray, depth: int) -> np.ndarray:
    """Vectorized :func:`morton_encode` over an (n, 3) integer array."""
    _check_depth(depth)
    positions = np.asarray(positions, dtype=np.int64).reshape(-1, 3)
    if positions.size and (positions.min() < 0 or positions.max() >= (1 << depth)):
        raise LevelRangeError(f"coordinates outside [0, {1 << depth})^3")
    codes = np.zeros(len(positions), dtype=np.int64)
    for bit in range(depth):
        for axis in range(3):
            codes |= ((positions[:, axis] >> bit) & 1) << (3 * bit + 2 - axis)
    return codes


def morton_decode_array(codes: np.ndarray, depth: int) -> np.ndarray:
    """Vectorized :func:`morton_decode`; returns an (n, 3) int64 array."""
    _check_depth(depth)
    codes = np.asarray(codes, dtype=np.int64).ravel()
    positions = np.zeros((len(codes), 3), dtype=np.int64)
    for bit in range(depth):
        for axis in range(3):
            positions[:, axis] |= ((codes >> (3 * bit + 2 - axis)) & 1) << bit
    return positions
