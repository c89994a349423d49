"""Tests for octree construction and corner sets."""

import itertools

import numpy as np
import pytest
from bv_shared import EmptyCloudError, LevelRangeError
from conftest import random_cloud
from voxel_core import (
    CORNER_OFFSETS,
    VoxelCloud,
    block_corners,
    build_octree,
    cube_corners,
    morton_encode_array,
    unique_corners,
)


class TestBuildOctree:
    """Test cases for build_octree."""

    def test_single_voxel_is_unary_chain(self) -> None:
        """One voxel gives one block per level."""
        octree = build_octree(VoxelCloud(2, np.array([[3, 1, 2]])))

        assert [octree.num_blocks(level) for level in range(7)] == [1] * 7

    def test_full_cube_doubles(self) -> None:
        """All eight voxels of d=1 give 1, 2, 4, 8 blocks."""
        grid = np.array(list(itertools.product((0, 1), repeat=3)))
        cloud = VoxelCloud.from_unsorted(1, grid)

        octree = build_octree(cloud)

        assert [octree.num_blocks(level) for level in range(4)] == [1, 2, 4, 8]

    def test_block_counts_match_prefix_sets(self, rng: np.random.Generator) -> None:
        """Blocks at level l are the distinct length-l Morton prefixes."""
        cloud = random_cloud(rng, 4, 150)
        octree = build_octree(cloud)

        for level in range(13):
            prefixes = {int(code) >> (12 - level) for code in cloud.morton_codes}
            assert octree.num_blocks(level) == len(prefixes)
            assert np.all(np.diff(octree.codes[level]) > 0)

    def test_weights_and_parents(self, rng: np.random.Generator) -> None:
        """Parent weight equals the sum of its children's weights."""
        octree = build_octree(random_cloud(rng, 3, 60))

        for level in range(1, octree.num_levels):
            sums = np.bincount(
                octree.parent[level],
                weights=octree.weights[level],
                minlength=octree.num_blocks(level - 1),
            )
            np.testing.assert_array_equal(sums, octree.weights[level - 1])
        assert octree.weights[0][0] == octree.num_voxels
        assert np.all(octree.weights[-1] == 1)

    def test_last_level_is_voxel_set(self, rng: np.random.Generator) -> None:
        """Level 3d blocks are exactly the voxels."""
        cloud = random_cloud(rng, 4, 80)
        octree = build_octree(cloud)

        np.testing.assert_array_equal(octree.shifts(12), cloud.positions)

    def test_cuboid_shifts(self) -> None:
        """Level 1 splits x only."""
        cloud = VoxelCloud.from_unsorted(1, np.array([[0, 1, 1], [1, 0, 0]]))

        octree = build_octree(cloud)

        np.testing.assert_array_equal(octree.shifts(1), [[0, 0, 0], [1, 0, 0]])
        np.testing.assert_array_equal(octree.shifts(2), [[0, 1, 0], [1, 0, 0]])

    def test_occupancy_codes(self) -> None:
        """Child j sets bit 7 - j."""
        cloud = VoxelCloud.from_unsorted(1, np.array([[0, 0, 0], [1, 1, 1]]))

        octree = build_octree(cloud)

        assert octree.occupancy_codes(0).tolist() == [0b10000001]

    def test_cube_children_are_contiguous(self, rng: np.random.Generator) -> None:
        """Cubic children ranges partition the next level."""
        octree = build_octree(random_cloud(rng, 4, 100))

        start, count = octree.cube_children(2)

        assert count.sum() == octree.cube_blocks(3)
        parents = octree.cube_parent(3)
        for block, (s, c) in enumerate(zip(start, count)):
            assert np.all(parents[s : s + c] == block)

    def test_empty_cloud(self) -> None:
        """An empty cloud has no octree."""
        with pytest.raises(EmptyCloudError):
            build_octree(VoxelCloud(2, np.zeros((0, 3), dtype=np.int64)))


class TestUniqueCorners:
    """Test cases for unique_corners."""

    def test_unit_cube(self) -> None:
        """One block at level 0 has the eight unit-cube corners."""
        octree = build_octree(VoxelCloud(2, np.array([[1, 2, 3]])))

        corners = unique_corners(octree, 0)

        assert len(corners) == 8
        assert {tuple(s) for s in corners.shifts} == set(
            itertools.product((0, 1), repeat=3)
        )

    def test_face_adjacent_cubes(self) -> None:
        """Two cubes sharing a face have 12 corners."""
        cloud = VoxelCloud.from_unsorted(1, np.array([[0, 0, 0], [1, 0, 0]]))

        corners = cube_corners(build_octree(cloud), 1)

        assert len(corners) == 12
        sharing = np.asarray(corners.corner_blocks().sum(axis=1)).ravel()
        assert sorted(sharing.tolist()) == [1] * 8 + [2] * 4

    def test_matches_set_union(self, rng: np.random.Generator) -> None:
        """Corner count equals the brute-force union size at every level."""
        octree = build_octree(random_cloud(rng, 3, 40))

        for level in range(octree.num_levels):
            expected = {
                (x + i, y + j, z + k)
                for x, y, z in octree.shifts(level)
                for i, j, k in itertools.product((0, 1), repeat=3)
            }
            corners = unique_corners(octree, level)
            assert len(corners) == len(expected)
            rebuilt = corners.shifts[corners.incidence] - octree.shifts(level)[:, None]
            assert np.all((rebuilt == 0) | (rebuilt == 1))

    def test_corners_sorted_and_lookup(self, rng: np.random.Generator) -> None:
        """Corners are Morton-sorted and lookup finds them."""
        octree = build_octree(random_cloud(rng, 3, 30))
        corners = cube_corners(octree, 2)

        assert np.all(np.diff(corners.codes) > 0)
        np.testing.assert_array_equal(
            corners.lookup(corners.shifts), np.arange(len(corners))
        )
        assert corners.lookup(np.array([[9, 9, 9]]))[0] == -1
        np.testing.assert_array_equal(
            corners.codes, morton_encode_array(corners.shifts, 4)
        )

    def test_level_out_of_range(self) -> None:
        """Levels beyond 3d are rejected."""
        octree = build_octree(VoxelCloud(1, np.array([[0, 0, 0]])))

        with pytest.raises(LevelRangeError):
            unique_corners(octree, 4)

    def test_block_subset(self, rng: np.random.Generator) -> None:
        """Corners of a block subset are those blocks' corners only."""
        octree = build_octree(random_cloud(rng, 3, 40))
        shifts = octree.cube_shifts(2)[::2]

        corners = block_corners(shifts, 6, octree.depth)

        expected = {
            tuple(s + offset) for s in shifts for offset in CORNER_OFFSETS
        }
        assert {tuple(s) for s in corners.shifts} == expected
        np.testing.assert_array_equal(
            corners.shifts[corners.incidence], shifts[:, None] + CORNER_OFFSETS
        )
