"""Octree pruning: choosing the blocks that become Bezier volumes.

A pruned octree keeps a top part of the occupancy tree. Its leaves are either
voxels, recovered losslessly from the occupancy codes, or Bezier volumes
(BVs) above the voxel level, whose surface comes from their control points.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from bv_shared import (
    ChecksumError,
    DimensionMismatchError,
    LevelRangeError,
    TruncatedStreamError,
    configure_logging,
)
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import cKDTree
from voxel_core import OctreeLevels, morton_decode_array

from .inloop import GeometryWavelets, child_only
from .surface import subdivide_blocks

logger = configure_logging("geometry-codec")

OCCUPANCY_BITS = 8
LEAF_FLAG_BITS = 1


@dataclass(frozen=True, eq=False)
class PrunedOctree:
    """Surviving blocks of every cubic level and which of them are leaves.

    Attributes:
        depth: Voxel grid depth d
        codes: Per cubic level, sorted Morton codes of the surviving blocks
        leaf: Per cubic level, leaf flag of every surviving block
    """

    depth: int
    codes: list[np.ndarray]
    leaf: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.codes) != self.depth + 1 or len(self.leaf) != self.depth + 1:
            raise DimensionMismatchError(
                f"a depth-{self.depth} tree has {self.depth + 1} levels"
            )
        if any(len(c) != len(f) for c, f in zip(self.codes, self.leaf)):
            raise DimensionMismatchError("one leaf flag per surviving block")
        if not np.all(self.leaf[-1]):
            raise ValueError("voxel-level blocks are always leaves")

    @classmethod
    def from_prunable(
        cls, octree: OctreeLevels, prunable: Sequence[np.ndarray]
    ) -> "PrunedOctree":
        """Make the shallowest prunable block of every branch a leaf.

        Args:
            octree: Full octree
            prunable: Per cubic level 0..d, a flag per occupied block

        Returns:
            The maximally pruned tree
        """
        depth = octree.depth
        if len(prunable) != depth + 1:
            raise DimensionMismatchError(f"need prunable flags for {depth + 1} levels")
        survive = np.ones(1, dtype=bool)
        codes: list[np.ndarray] = []
        leaves: list[np.ndarray] = []
        for level in range(depth + 1):
            flags = np.asarray(prunable[level], dtype=bool)
            if len(flags) != octree.cube_blocks(level):
                raise DimensionMismatchError(f"prunable flags of level {level}")
            leaf = survive & (flags | (level == depth))
            codes.append(octree.codes[3 * level][survive])
            leaves.append(leaf[survive])
            if level < depth:
                parent = octree.cube_parent(level + 1)
                survive = survive[parent] & ~leaf[parent]
        return cls(depth, codes, leaves)

    @classmethod
    def unpruned(cls, octree: OctreeLevels) -> "PrunedOctree":
        """The full tree, every leaf a voxel."""
        return cls.from_prunable(
            octree,
            [np.zeros(octree.cube_blocks(lv), bool) for lv in range(octree.depth + 1)],
        )

    @property
    def num_leaves(self) -> int:
        return int(sum(np.count_nonzero(f) for f in self.leaf))

    @property
    def num_bvs(self) -> int:
        """Leaves above the voxel level."""
        return int(sum(np.count_nonzero(f) for f in self.leaf[:-1]))

    @property
    def num_internal(self) -> int:
        return int(sum(np.count_nonzero(~f) for f in self.leaf))

    def num_blocks(self, level: int) -> int:
        return len(self.codes[level])

    def shifts(self, level: int) -> np.ndarray:
        """Shifts of the surviving blocks of a cubic level."""
        return morton_decode_array(self.codes[level], level)

    def parents(self, level: int) -> np.ndarray:
        """Index of each surviving block's parent at ``level - 1``."""
        if not 1 <= level <= self.depth:
            raise LevelRangeError(f"cubic level {level} has no parent level")
        return np.searchsorted(self.codes[level - 1], self.codes[level] >> 3)

    def shallowest_leaf_level(self) -> int:
        return next(lv for lv, f in enumerate(self.leaf) if np.any(f))

    def occupancy_codes(self, level: int) -> np.ndarray:
        """Child occupancy byte of every internal block, bit ``7 - j`` for child j."""
        if not 0 <= level < self.depth:
            raise LevelRangeError(f"cubic level {level} has no children")
        child = (self.codes[level + 1] & 0b111).astype(np.int64)
        occupancy = np.zeros(self.num_blocks(level), dtype=np.int64)
        np.bitwise_or.at(occupancy, self.parents(level + 1), 1 << (7 - child))
        result: np.ndarray = occupancy[~self.leaf[level]].astype(np.uint8)
        return result

    def coded_masks(self) -> list[np.ndarray]:
        """Per level, blocks with a BV in their subtree, themselves included.

        Exactly these blocks need control points: BVs for their surface and
        their ancestors for the predictions.
        """
        return self._coded_masks

    @cached_property
    def _coded_masks(self) -> list[np.ndarray]:
        masks = [np.zeros(self.num_blocks(self.depth), dtype=bool)]
        for level in range(self.depth - 1, -1, -1):
            below = np.bincount(
                self.parents(level + 1),
                weights=masks[0],
                minlength=self.num_blocks(level),
            )
            masks.insert(0, self.leaf[level] | (below > 0))
        return masks

    def coded_shifts(self, start_level: int) -> list[np.ndarray]:
        """Shifts of the coded blocks from ``start_level`` to the deepest BV.

        Raises:
            LevelRangeError: If a BV lies above ``start_level``
        """
        if self.num_bvs and self.shallowest_leaf_level() < start_level:
            raise LevelRangeError(
                f"a BV at level {self.shallowest_leaf_level()} lies above start "
                f"level {start_level}"
            )
        masks = self.coded_masks()
        result: list[np.ndarray] = []
        for level in range(start_level, self.depth):
            if not np.any(masks[level]):
                break
            result.append(self.shifts(level)[masks[level]])
        return result

    def bv_rows(self, level: int) -> np.ndarray:
        """Rows of the BVs of ``level`` among that level's coded blocks."""
        mask = self.coded_masks()[level]
        return np.flatnonzero(self.leaf[level][mask])

    def leaf_flags(self, start_level: int) -> np.ndarray:
        """Flags of the surviving blocks of levels ``start_level..d-1``."""
        flags = self.leaf[start_level : self.depth]
        return np.concatenate(flags) if flags else np.zeros(0, dtype=bool)

    @classmethod
    def from_stream(
        cls, depth: int, start_level: int, occupancy: bytes, flags: bytes
    ) -> "PrunedOctree":
        """Rebuild the tree from occupancy bytes and packed leaf flags.

        Raises:
            TruncatedStreamError: If either array ends early
            ChecksumError: If bytes are left over or an internal block is empty
        """
        occupancy_bytes = np.frombuffer(occupancy, dtype=np.uint8)
        flag_bits = np.unpackbits(np.frombuffer(flags, dtype=np.uint8)).astype(bool)
        codes = [np.zeros(1, dtype=np.int64)]
        leaves: list[np.ndarray] = []
        used_bytes = used_bits = 0
        for level in range(depth + 1):
            count = len(codes[level])
            if level == depth:
                leaf = np.ones(count, dtype=bool)
            elif level < start_level:
                leaf = np.zeros(count, dtype=bool)
            else:
                if used_bits + count > len(flag_bits):
                    raise TruncatedStreamError("leaf flags end early")
                leaf = flag_bits[used_bits : used_bits + count]
                used_bits += count
            leaves.append(leaf)
            if level == depth:
                break
            internal = np.flatnonzero(~leaf)
            if used_bytes + len(internal) > len(occupancy_bytes):
                raise TruncatedStreamError("occupancy codes end early")
            block = occupancy_bytes[used_bytes : used_bytes + len(internal)]
            used_bytes += len(internal)
            if np.any(block == 0):
                raise ChecksumError("internal block without occupied children")
            rows, child = np.nonzero(np.unpackbits(block[:, None], axis=1))
            codes.append((codes[level][internal][rows] << 3) | child)
        if used_bytes != len(occupancy_bytes):
            raise ChecksumError("occupancy codes left over after the voxel level")
        if len(flag_bits) - used_bits >= 8 or np.any(flag_bits[used_bits:]):
            raise ChecksumError("leaf flags left over after the voxel level")
        return cls(depth, codes, leaves)


def _check_full_pass(octree: OctreeLevels, wavelets: GeometryWavelets) -> None:
    if wavelets.last_level != octree.depth:
        raise ValueError("pruning needs coefficients down to the voxel level")
    for level in range(wavelets.start_level, octree.depth + 1):
        incidence = wavelets.corners[wavelets.index(level)].incidence
        if len(incidence) != octree.cube_blocks(level):
            raise DimensionMismatchError(
                f"level {level} coefficients do not cover every occupied block"
            )


def _from_levels(
    octree: OctreeLevels, prunable: dict[int, np.ndarray]
) -> PrunedOctree:
    flags = [
        prunable.get(lv, np.zeros(octree.cube_blocks(lv), dtype=bool))
        for lv in range(octree.depth + 1)
    ]
    return PrunedOctree.from_prunable(octree, flags)


def prune_fixed(octree: OctreeLevels, level: int) -> PrunedOctree:
    """Every occupied block of ``level`` becomes a leaf."""
    if not 0 <= level <= octree.depth:
        raise LevelRangeError(f"pruning level {level} outside [0, {octree.depth}]")
    return _from_levels(
        octree, {level: np.ones(octree.cube_blocks(level), dtype=bool)}
    )


def prune_zero_wavelets(
    octree: OctreeLevels, wavelets: GeometryWavelets, threshold: int = 0
) -> PrunedOctree:
    """Prune every subtree whose residuals all satisfy ``|q| <= threshold``.

    Args:
        octree: Full octree
        wavelets: In-loop coefficients of every occupied block down to the voxels
        threshold: Largest residual magnitude treated as zero

    Returns:
        The maximally pruned tree
    """
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    _check_full_pass(octree, wavelets)
    start = wavelets.start_level
    quiet_below = np.ones(octree.cube_blocks(octree.depth), dtype=bool)
    prunable: dict[int, np.ndarray] = {}
    for level in range(octree.depth - 1, start - 1, -1):
        child_level = level + 1
        corners = wavelets.corners[wavelets.index(child_level)]
        small = np.abs(wavelets.corner_indices(child_level)) <= threshold
        quiet = np.all(small[corners.incidence], axis=1) & quiet_below
        noisy = np.bincount(
            octree.cube_parent(child_level),
            weights=~quiet,
            minlength=octree.cube_blocks(level),
        )
        quiet_below = noisy == 0
        prunable[level] = quiet_below
    pruned = _from_levels(octree, prunable)
    logger.info(
        "Zero-wavelet pruning",
        threshold=threshold,
        bvs=pruned.num_bvs,
        leaves=pruned.num_leaves,
    )
    return pruned


def _one_way_mse(
    source: np.ndarray,
    source_owner: np.ndarray,
    target: np.ndarray,
    target_owner: np.ndarray,
    num_blocks: int,
    miss: float,
    separation: float,
) -> np.ndarray:
    counts = np.bincount(source_owner, minlength=num_blocks)
    if len(source) == 0:
        return np.zeros(num_blocks)
    if len(target) == 0:
        return np.where(counts > 0, miss, 0.0)
    # the owner coordinate keeps nearest neighbours inside the block
    tree = cKDTree(np.column_stack((target, target_owner * separation)))
    _, nearest = tree.query(np.column_stack((source, source_owner * separation)))
    offset = source - target[nearest]
    squared = np.einsum("ij,ij->i", offset, offset).astype(np.float64)
    squared = np.where(target_owner[nearest] == source_owner, squared, miss)
    total = np.bincount(source_owner, weights=squared, minlength=num_blocks)
    mse: np.ndarray = total / np.maximum(counts, 1)
    return mse


def block_errors(
    octree: OctreeLevels, wavelets: GeometryWavelets, level: int
) -> np.ndarray:
    """Max of the two one-way mean squared errors of every block as a BV.

    Each block is reconstructed by subdivision from its own reconstructed
    control points and compared with the original voxels inside it. A block
    reconstructing to nothing scores its squared diagonal.
    """
    depth = octree.depth
    i = wavelets.index(level)
    corners = wavelets.corners[i]
    controls = wavelets.reconstruction[i][corners.incidence]
    shifts = octree.cube_shifts(level)
    recon, recon_owner = subdivide_blocks(level, shifts, controls, depth)

    original = morton_decode_array(octree.codes[-1], depth)
    original_owner = octree.block_of_voxel(3 * level)
    side = 1 << (depth - level)
    miss = 3.0 * side * side
    separation = 4.0 * (1 << depth)
    n = len(shifts)
    to_recon = _one_way_mse(
        original, original_owner, recon, recon_owner, n, miss, separation
    )
    to_original = _one_way_mse(
        recon, recon_owner, original, original_owner, n, miss, separation
    )
    return np.maximum(to_recon, to_original)


def prune_distortion(
    octree: OctreeLevels, wavelets: GeometryWavelets, threshold: float
) -> PrunedOctree:
    """Prune every block whose estimated error is at most ``threshold``."""
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    _check_full_pass(octree, wavelets)
    prunable = {
        level: block_errors(octree, wavelets, level) <= threshold
        for level in range(wavelets.start_level, octree.depth)
    }
    pruned = _from_levels(octree, prunable)
    logger.info(
        "Distortion pruning",
        threshold=threshold,
        bvs=pruned.num_bvs,
        leaves=pruned.num_leaves,
    )
    return pruned


def rd_prune_tree(
    parents: Sequence[np.ndarray],
    distortion: Sequence[np.ndarray],
    rate: Sequence[np.ndarray],
    overhead: Sequence[np.ndarray],
    lam: float,
) -> tuple[list[np.ndarray], float]:
    """Bottom-up optimal pruning of a forest under ``D + lam * R``.

    Generation 0 holds the roots; ``parents[g]`` maps the nodes of generation
    ``g + 1`` to their parents in generation ``g``. A node kept as a leaf costs
    its distortion plus ``lam`` times its rate; a split node costs its
    children plus ``lam`` times its overhead. Childless nodes are leaves.

    Returns:
        (per generation, True where the leaf is no more costly than the
        split, total optimal cost of the roots)
    """
    if lam < 0:
        raise ValueError(f"rate weight must be non-negative, got {lam}")
    generations = len(distortion)
    if len(parents) != generations - 1:
        raise DimensionMismatchError("one parent array per generation below the roots")
    cost = distortion[-1] + lam * rate[-1]
    prunable = [np.ones(len(cost), dtype=bool)]
    for g in range(generations - 2, -1, -1):
        size = len(distortion[g])
        leaf_cost = distortion[g] + lam * rate[g]
        children = np.bincount(parents[g], minlength=size)
        below = np.bincount(parents[g], weights=cost, minlength=size)
        split_cost = np.where(children > 0, below + lam * overhead[g], np.inf)
        prune = leaf_cost <= split_cost
        cost = np.where(prune, leaf_cost, split_cost)
        prunable.insert(0, prune)
    return prunable, float(np.sum(cost))


def _symbol_bits(values: np.ndarray) -> np.ndarray:
    """Ideal code length of each value under its own empirical histogram."""
    if len(values) == 0:
        return np.zeros(0)
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    bits: np.ndarray = -np.log2(counts / len(values))[inverse.ravel()]
    return bits


def _corner_bits(wavelets: GeometryWavelets, level: int) -> np.ndarray:
    i = wavelets.index(level)
    if i == 0:
        return _symbol_bits(wavelets.start_q)
    bits = np.zeros(len(wavelets.corners[i]))
    bits[child_only(wavelets.corners[i].shifts)] = _symbol_bits(
        wavelets.residual_q[i - 1]
    )
    return bits


def prune_rd(
    octree: OctreeLevels, wavelets: GeometryWavelets, lam: float
) -> PrunedOctree:
    """Rate-distortion optimal pruning.

    Distortion of a BV is its voxel count times its block error. Its rate is
    the leaf flag plus the ideal bits of the coefficients on its corners, each
    level under its own histogram and without discounting shared corners; a
    split block pays the occupancy byte instead of nothing. Voxel leaves are
    free.
    """
    _check_full_pass(octree, wavelets)
    start = wavelets.start_level
    depth = octree.depth
    parents: list[np.ndarray] = []
    distortion: list[np.ndarray] = []
    rate: list[np.ndarray] = []
    overhead: list[np.ndarray] = []
    for level in range(start, depth):
        corners = wavelets.corners[wavelets.index(level)]
        own = _corner_bits(wavelets, level)[corners.incidence].sum(axis=1)
        errors = block_errors(octree, wavelets, level)
        distortion.append(octree.weights[3 * level] * errors)
        rate.append(LEAF_FLAG_BITS + own)
        overhead.append(OCCUPANCY_BITS + LEAF_FLAG_BITS + own)
        parents.append(octree.cube_parent(level + 1))
    voxels = np.zeros(octree.cube_blocks(depth))
    distortion.append(voxels)
    rate.append(voxels)
    overhead.append(voxels)

    prunable, cost = rd_prune_tree(parents, distortion, rate, overhead, lam)
    pruned = _from_levels(
        octree, {start + g: flags for g, flags in enumerate(prunable)}
    )
    logger.info(
        "Rate-distortion pruning",
        lam=lam,
        cost=round(cost, 3),
        bvs=pruned.num_bvs,
        leaves=pruned.num_leaves,
    )
    return pruned


class PruningSpec(BaseModel):
    """A pruning method and its parameter, written ``method:value``.

    ``none`` keeps voxel leaves (lossless), ``fixed:L`` cuts at level L,
    ``zero:t`` prunes subtrees of residuals within t, ``dist:e`` prunes blocks
    with error at most e and ``rd:lambda`` minimizes ``D + lambda * R``.
    """

    model_config = ConfigDict(frozen=True)

    method: Literal["none", "fixed", "zero", "dist", "rd"] = "none"
    value: float = Field(default=0.0, ge=0, description="Method parameter")

    @model_validator(mode="after")
    def _integer_parameters(self) -> "PruningSpec":
        if self.method in ("fixed", "zero") and not float(self.value).is_integer():
            raise ValueError(
                f"{self.method} pruning takes an integer, got {self.value}"
            )
        return self

    @classmethod
    def parse(cls, text: str) -> "PruningSpec":
        """Parse ``none`` or ``method:value``.

        Raises:
            ValueError: If the text is malformed or the value out of range
        """
        text = text.strip().lower()
        if text == "none":
            return cls()
        method, separator, value = text.partition(":")
        if not separator:
            raise ValueError(f"pruning '{text}' is not of the form method:value")
        try:
            number = float(value)
        except ValueError as exc:
            raise ValueError(f"pruning value '{value}' is not a number") from exc
        return cls.model_validate({"method": method, "value": number})

    def __str__(self) -> str:
        if self.method == "none":
            return "none"
        if self.method in ("fixed", "zero"):
            return f"{self.method}:{int(self.value)}"
        return f"{self.method}:{self.value:g}"
