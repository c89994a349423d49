"""Tests for the region-adaptive Haar transform."""

import math

import numpy as np
import pytest
from attribute_codec import (
    RahtCoefficients,
    build_hierarchy,
    project,
    raht_forward,
    raht_inverse,
    raht_weights,
)
from bv_shared import DimensionMismatchError, LevelRangeError
from conftest import random_cloud
from voxel_core import VoxelCloud, build_octree


class TestRahtForward:
    """Test cases for raht_forward."""

    def test_single_voxel(self) -> None:
        cloud = VoxelCloud(3, np.array([[5, 1, 6]]), np.array([[7.0]]))

        coeffs = raht_forward(cloud)

        assert coeffs.dc[0] == 7.0
        assert sum(len(h) for h in coeffs.highpass) == 0

    def test_two_voxels(self) -> None:
        cloud = VoxelCloud.from_unsorted(
            1, np.array([[0, 0, 0], [1, 0, 0]]), np.array([2.0, 4.0])
        )

        coeffs = raht_forward(cloud)

        assert coeffs.dc[0] == pytest.approx(6 / math.sqrt(2))
        assert coeffs.highpass[0][0, 0] == pytest.approx(2 / math.sqrt(2))
        assert np.sum(coeffs.flatten() ** 2) == pytest.approx(20.0)

    def test_unequal_weights(self) -> None:
        """One voxel of value 0 merged with three voxels of value 4."""
        positions = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 0, 1]])
        cloud = VoxelCloud.from_unsorted(1, positions, np.array([0.0, 4, 4, 4]))

        coeffs = raht_forward(cloud)

        assert coeffs.dc[0] == pytest.approx(6.0)
        assert coeffs.highpass[0][0, 0] == pytest.approx(2 * math.sqrt(3))
        assert coeffs.dc[0] == pytest.approx(math.sqrt(4) * 3.0)

    def test_critical_sampling(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 4, 200, channels=3)

        coeffs = raht_forward(cloud)

        assert coeffs.num_coefficients == cloud.num_points
        assert coeffs.flatten().shape == (cloud.num_points, 3)

    def test_parseval(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 4, 200, channels=3)

        coeffs = raht_forward(cloud)

        np.testing.assert_allclose(
            coeffs.energy(), np.sum(cloud.attributes**2, axis=0), rtol=1e-9
        )

    def test_dc_is_scaled_mean(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 4, 150)

        coeffs = raht_forward(cloud)

        expected = math.sqrt(cloud.num_points) * cloud.attributes.mean(axis=0)
        np.testing.assert_allclose(coeffs.dc, expected, atol=1e-9)

    def test_assembled_transform_is_orthonormal(
        self, rng: np.random.Generator
    ) -> None:
        positions = np.unique(rng.integers(0, 16, size=(100, 3)), axis=0)
        cloud = VoxelCloud.from_unsorted(4, positions, np.eye(len(positions)))

        matrix = raht_forward(cloud).flatten()

        np.testing.assert_allclose(
            matrix.T @ matrix, np.eye(len(positions)), atol=1e-9
        )

    def test_dc_needs_full_cascade(self, rng: np.random.Generator) -> None:
        coeffs = raht_forward(random_cloud(rng, 3, 20), start_level=3)

        with pytest.raises(LevelRangeError):
            _ = coeffs.dc

    def test_start_level_out_of_range(self, rng: np.random.Generator) -> None:
        with pytest.raises(LevelRangeError):
            raht_forward(random_cloud(rng, 2, 10), start_level=7)


class TestRahtInverse:
    """Test cases for raht_inverse."""

    def test_two_voxel_round_trip(self) -> None:
        cloud = VoxelCloud.from_unsorted(
            1, np.array([[0, 0, 0], [1, 0, 0]]), np.array([2.0, 4.0])
        )
        octree = build_octree(cloud)

        values = raht_inverse(raht_forward(cloud, octree), octree)

        np.testing.assert_allclose(values[:, 0], [2.0, 4.0])

    @pytest.mark.parametrize("start_level", [0, 4, 9])
    def test_round_trip(self, rng: np.random.Generator, start_level: int) -> None:
        cloud = random_cloud(rng, 5, 256, channels=2)
        octree = build_octree(cloud)

        coeffs = raht_forward(cloud, octree, start_level=start_level)
        values = raht_inverse(coeffs, octree)

        assert np.max(np.abs(values - cloud.attributes)) <= 1e-9

    def test_zeroed_highpass_gives_block_means(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 4, 120)
        octree = build_octree(cloud)
        level = 6
        coeffs = raht_forward(cloud, octree, start_level=level)
        lowpass = RahtCoefficients(
            level,
            coeffs.base,
            coeffs.nodes,
            [np.zeros_like(h) for h in coeffs.highpass],
        )

        values = raht_inverse(lowpass, octree)

        blocks = octree.block_of_voxel(level)
        means = np.bincount(blocks, weights=cloud.attributes[:, 0]) / (
            octree.weights[level]
        )
        np.testing.assert_allclose(values[:, 0], means[blocks], atol=1e-9)

    def test_count_mismatch(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 40)
        octree = build_octree(cloud)
        coeffs = raht_forward(cloud, octree)
        broken = RahtCoefficients(
            0, coeffs.base, coeffs.nodes, coeffs.highpass[:-1]
        )

        with pytest.raises(DimensionMismatchError):
            raht_inverse(broken, octree)


class TestRahtWeights:
    """Test cases for raht_weights."""

    def test_weights_match_descendant_counts(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 70)
        octree = build_octree(cloud)

        weights = raht_weights(octree)

        assert weights[0][0] == cloud.num_points
        assert np.all(weights[-1] == 1)
        for level in range(octree.num_levels):
            prefixes = cloud.morton_codes >> (3 * cloud.depth - level)
            _, counts = np.unique(prefixes, return_counts=True)
            np.testing.assert_array_equal(weights[level], counts)

    def test_unnormalized_lowpass_is_projection(
        self, rng: np.random.Generator
    ) -> None:
        cloud = random_cloud(rng, 3, 80)
        octree = build_octree(cloud)
        hierarchy = build_hierarchy(octree, 1)

        for level in range(octree.num_levels):
            coeffs = raht_forward(cloud, octree, start_level=level)
            unnormalized = coeffs.base / np.sqrt(octree.weights[level])[:, None]
            expected = project(hierarchy.system(level, cloud.attributes))
            np.testing.assert_allclose(unnormalized, expected, atol=1e-9)
