"""Tests for octree pruning and the pruned tree arrays."""

import itertools

import numpy as np
import pytest
from bv_shared import ChecksumError, LevelRangeError, TruncatedStreamError
from conftest import random_cloud, sphere_cloud
from geometry_codec import (
    GeometryWavelets,
    PrunedOctree,
    PruningSpec,
    compute_sdf,
    encode_in_loop,
    prune_distortion,
    prune_fixed,
    prune_rd,
    prune_zero_wavelets,
    rd_prune_tree,
)
from voxel_core import OctreeLevels, VoxelCloud, build_octree


def _full_pass(
    cloud: VoxelCloud, start: int, qstep: float
) -> tuple[OctreeLevels, GeometryWavelets]:
    octree = build_octree(cloud)
    return octree, encode_in_loop(compute_sdf(cloud, octree), start, qstep)


def _assert_same_tree(ours: PrunedOctree, theirs: PrunedOctree) -> None:
    assert ours.depth == theirs.depth
    for level in range(ours.depth + 1):
        np.testing.assert_array_equal(ours.codes[level], theirs.codes[level])
        np.testing.assert_array_equal(ours.leaf[level], theirs.leaf[level])


def _stream_arrays(pruned: PrunedOctree, start: int) -> tuple[bytes, bytes]:
    occupancy = b"".join(
        pruned.occupancy_codes(level).tobytes() for level in range(pruned.depth)
    )
    return occupancy, np.packbits(pruned.leaf_flags(start)).tobytes()


class TestPruneFixed:
    """Test cases for prune_fixed."""

    def test_voxel_level_is_unpruned(self, rng: np.random.Generator) -> None:
        octree = build_octree(random_cloud(rng, 3, 50))

        pruned = prune_fixed(octree, 3)

        _assert_same_tree(pruned, PrunedOctree.unpruned(octree))
        assert pruned.num_bvs == 0

    def test_root_is_single_volume(self, rng: np.random.Generator) -> None:
        pruned = prune_fixed(build_octree(random_cloud(rng, 3, 50)), 0)

        assert pruned.num_leaves == 1
        assert pruned.num_bvs == 1
        assert all(pruned.num_blocks(level) == 0 for level in range(1, 4))

    @pytest.mark.parametrize("level", [1, 2])
    def test_leaf_count(self, rng: np.random.Generator, level: int) -> None:
        octree = build_octree(random_cloud(rng, 3, 60))

        pruned = prune_fixed(octree, level)

        assert pruned.num_leaves == octree.cube_blocks(level)
        assert pruned.shallowest_leaf_level() == level
        assert pruned.num_internal == sum(octree.cube_blocks(lv) for lv in range(level))

    def test_level_out_of_range(self, rng: np.random.Generator) -> None:
        octree = build_octree(random_cloud(rng, 2, 10))

        with pytest.raises(LevelRangeError):
            prune_fixed(octree, 3)


class TestPruneZeroWavelets:
    """Test cases for prune_zero_wavelets."""

    @staticmethod
    def _oracle(
        octree: OctreeLevels, wavelets: GeometryWavelets, threshold: int
    ) -> PrunedOctree:
        """Scan every descendant corner of every block."""
        depth = octree.depth
        start = wavelets.start_level
        prunable = [np.zeros(octree.cube_blocks(lv), bool) for lv in range(depth + 1)]
        noisy: dict[int, np.ndarray] = {}
        for level in range(start + 1, depth + 1):
            corners = wavelets.corners[wavelets.index(level)]
            q = np.abs(wavelets.corner_indices(level))[corners.incidence]
            noisy[level] = np.any(q > threshold, axis=1)
        for level in range(start, depth):
            codes = octree.codes[3 * level]
            for b, code in enumerate(codes):
                quiet = True
                for below in range(level + 1, depth + 1):
                    ancestors = octree.codes[3 * below] >> (3 * (below - level))
                    if np.any(noisy[below][ancestors == code]):
                        quiet = False
                prunable[level][b] = quiet
        return PrunedOctree.from_prunable(octree, prunable)

    @pytest.mark.parametrize("threshold", [0, 1, 2])
    def test_matches_subtree_scan(
        self, rng: np.random.Generator, threshold: int
    ) -> None:
        for _ in range(5):
            octree, wavelets = _full_pass(random_cloud(rng, 3, 40), 1, 0.6)

            pruned = prune_zero_wavelets(octree, wavelets, threshold)

            _assert_same_tree(pruned, self._oracle(octree, wavelets, threshold))

    def test_large_threshold_prunes_to_start(self, rng: np.random.Generator) -> None:
        octree, wavelets = _full_pass(random_cloud(rng, 3, 60), 1, 0.5)

        pruned = prune_zero_wavelets(octree, wavelets, 10**6)

        assert pruned.num_bvs == octree.cube_blocks(1)
        assert pruned.shallowest_leaf_level() == 1

    def test_needs_full_pass(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 40)
        octree = build_octree(cloud)
        partial = encode_in_loop(compute_sdf(cloud, octree), 1, 1.0, [])

        with pytest.raises(ValueError):
            prune_zero_wavelets(octree, partial)


class TestPruneDistortion:
    """Test cases for prune_distortion."""

    def test_leaves_shrink_as_threshold_grows(self) -> None:
        cloud = sphere_cloud(4, 5.0)
        octree, wavelets = _full_pass(cloud, 1, 1.0)

        counts = [
            prune_distortion(octree, wavelets, e).num_leaves
            for e in (0.0, 0.5, 2.0, 10.0, 500.0)
        ]

        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_huge_threshold_prunes_to_start(self) -> None:
        cloud = sphere_cloud(4, 5.0)
        octree, wavelets = _full_pass(cloud, 1, 1.0)

        pruned = prune_distortion(octree, wavelets, 1e9)

        assert pruned.num_bvs == octree.cube_blocks(1)

    def test_negative_threshold_rejected(self) -> None:
        octree, wavelets = _full_pass(sphere_cloud(3, 2.5), 1, 1.0)

        with pytest.raises(ValueError):
            prune_distortion(octree, wavelets, -1.0)


class TestRdPruneTree:
    """Test cases for rd_prune_tree and prune_rd."""

    parents = [np.array([0, 0]), np.array([0, 0, 1])]
    distortion = [np.array([10.0]), np.array([4.0, 2.5]), np.array([1.0, 0.5, 2.5])]
    rate = [np.array([1.0]), np.array([2.0, 1.0]), np.array([0.5, 0.5, 0.5])]
    overhead = [np.array([2.0]), np.array([1.5, 1.5]), np.zeros(3)]

    def _exhaustive(self, lam: float) -> float:
        """Cheapest cut over every pruning of the toy tree."""

        def leaf(g: int, n: int) -> float:
            return float(self.distortion[g][n] + lam * self.rate[g][n])

        def options(g: int, n: int) -> list[float]:
            costs = [leaf(g, n)]
            if g + 1 < len(self.distortion):
                children = np.flatnonzero(self.parents[g] == n)
                if len(children):
                    per_child = [options(g + 1, int(c)) for c in children]
                    for combo in itertools.product(*per_child):
                        costs.append(sum(combo) + lam * self.overhead[g][n])
            return costs

        return min(options(0, 0))

    @pytest.mark.parametrize("lam", [0.0, 0.5, 2.0, 10.0])
    def test_matches_exhaustive_search(self, lam: float) -> None:
        _, cost = rd_prune_tree(
            self.parents, self.distortion, self.rate, self.overhead, lam
        )

        assert cost == pytest.approx(self._exhaustive(lam))

    def test_zero_weight_minimizes_distortion(self) -> None:
        prunable, cost = rd_prune_tree(
            self.parents, self.distortion, self.rate, self.overhead, 0.0
        )

        assert cost == pytest.approx(4.0)
        assert not prunable[0][0]
        assert list(prunable[1]) == [False, True]

    def test_negative_weight_rejected(self) -> None:
        with pytest.raises(ValueError):
            rd_prune_tree(self.parents, self.distortion, self.rate, self.overhead, -1)

    def test_huge_weight_keeps_one_volume(self, rng: np.random.Generator) -> None:
        octree, wavelets = _full_pass(random_cloud(rng, 3, 80), 0, 1.0)

        pruned = prune_rd(octree, wavelets, 1e9)

        assert pruned.num_leaves == 1
        assert pruned.num_bvs == 1

    def test_zero_weight_keeps_exact_blocks_only(self) -> None:
        cloud = sphere_cloud(4, 5.0)
        octree, wavelets = _full_pass(cloud, 1, 1.0)

        pruned = prune_rd(octree, wavelets, 0.0)
        exact = prune_distortion(octree, wavelets, 0.0)

        assert pruned.num_leaves <= exact.num_leaves


class TestPrunedOctree:
    """Test cases for PrunedOctree arrays and stream round trips."""

    def test_stream_round_trip(self, rng: np.random.Generator) -> None:
        octree, wavelets = _full_pass(random_cloud(rng, 4, 120), 1, 0.8)
        pruned = prune_zero_wavelets(octree, wavelets, 1)
        occupancy, flags = _stream_arrays(pruned, 1)

        rebuilt = PrunedOctree.from_stream(4, 1, occupancy, flags)

        _assert_same_tree(rebuilt, pruned)

    def test_truncated_occupancy(self, rng: np.random.Generator) -> None:
        pruned = prune_fixed(build_octree(random_cloud(rng, 3, 50)), 2)
        occupancy, flags = _stream_arrays(pruned, 2)

        with pytest.raises(TruncatedStreamError):
            PrunedOctree.from_stream(3, 2, occupancy[:-1], flags)

    def test_trailing_occupancy(self, rng: np.random.Generator) -> None:
        pruned = prune_fixed(build_octree(random_cloud(rng, 3, 50)), 2)
        occupancy, flags = _stream_arrays(pruned, 2)

        with pytest.raises(ChecksumError):
            PrunedOctree.from_stream(3, 2, occupancy + b"\x80", flags)

    def test_coded_blocks(self, rng: np.random.Generator) -> None:
        """Coded blocks are the BVs and their ancestors from the start level."""
        octree = build_octree(random_cloud(rng, 3, 50))
        pruned = prune_fixed(octree, 2)

        coded = pruned.coded_shifts(1)

        assert [len(s) for s in coded] == [octree.cube_blocks(1), pruned.num_bvs]
        np.testing.assert_array_equal(pruned.bv_rows(2), np.arange(pruned.num_bvs))

    def test_volume_above_start_rejected(self, rng: np.random.Generator) -> None:
        pruned = prune_fixed(build_octree(random_cloud(rng, 3, 50)), 1)

        with pytest.raises(LevelRangeError):
            pruned.coded_shifts(2)


class TestPruningSpec:
    """Test cases for PruningSpec parsing."""

    def test_parse(self) -> None:
        assert PruningSpec.parse("none").method == "none"
        assert PruningSpec.parse("fixed:3") == PruningSpec(method="fixed", value=3)
        assert PruningSpec.parse(" RD:0.5 ").value == 0.5

    @pytest.mark.parametrize(
        "text", ["none", "fixed:3", "zero:0", "dist:500", "rd:0.25"]
    )
    def test_text_form(self, text: str) -> None:
        assert str(PruningSpec.parse(text)) == text

    @pytest.mark.parametrize(
        "text", ["fixed:2.5", "bogus:1", "zero", "dist:-1", "rd:abc"]
    )
    def test_invalid(self, text: str) -> None:
        with pytest.raises(ValueError):
            PruningSpec.parse(text)
