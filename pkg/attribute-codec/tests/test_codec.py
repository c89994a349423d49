"""Tests for the attribute encoder, decoder and smoothing."""

import numpy as np
import pytest
from attribute_codec import (
    build_hierarchy,
    bv_decode,
    bv_encode,
    evaluate_spline,
    geometry_fingerprint,
    project,
    smooth,
)
from bv_shared import (
    ChecksumError,
    DimensionMismatchError,
    LevelRangeError,
    MagicMismatchError,
)
from conftest import SURFACES, random_cloud, surface_cloud
from voxel_core import VoxelCloud, build_octree


def _rgb_cloud(rng: np.random.Generator, depth: int, count: int) -> VoxelCloud:
    cloud = random_cloud(rng, depth, count)
    colours = rng.integers(0, 256, size=(cloud.num_points, 3)).astype(np.float64)
    return cloud.with_attributes(colours)


class TestEncodeDecode:
    """Test cases for bv_encode and bv_decode."""

    @pytest.mark.parametrize("order", [1, 2])
    def test_near_lossless(self, rng: np.random.Generator, order: int) -> None:
        cloud = _rgb_cloud(rng, 3, 120)

        encoded = bv_encode(cloud, 0, 1e-6, order=order)
        decoded = bv_decode(encoded.data, cloud)

        np.testing.assert_array_equal(np.rint(decoded), cloud.attributes)

    @pytest.mark.parametrize("order", [1, 2])
    def test_error_bounded_by_half_step(
        self, rng: np.random.Generator, order: int
    ) -> None:
        cloud = random_cloud(rng, 3, 150)
        values = 40.0 * cloud.attributes

        encoded = bv_encode(cloud.with_attributes(values), 1, 4.0, order=order)
        decoded = bv_decode(encoded.data, cloud)

        rmse = np.sqrt(np.mean((decoded - values) ** 2))
        assert rmse <= 2.0

    def test_constant_colour_has_no_details(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 100)
        colours = np.tile([200.0, 30.0, 90.0], (cloud.num_points, 1))
        cloud = cloud.with_attributes(colours)

        encoded = bv_encode(cloud, 0, 1.0)

        assert all(np.count_nonzero(q) == 0 for q in encoded.quantized[1:])
        np.testing.assert_allclose(
            bv_decode(encoded.data, cloud), colours, atol=4.0
        )

    def test_quantized_counts_are_critical(self, rng: np.random.Generator) -> None:
        cloud = _rgb_cloud(rng, 3, 90)

        encoded = bv_encode(cloud, 0, 8.0)

        assert sum(len(q) for q in encoded.quantized) == cloud.num_points
        assert encoded.bits_per_point == 8.0 * len(encoded.data) / cloud.num_points

    def test_section_sizes_cover_stream(self, rng: np.random.Generator) -> None:
        encoded = bv_encode(_rgb_cloud(rng, 3, 60), 0, 2.0, order=1)

        assert sum(encoded.section_bytes.values()) == len(encoded.data)
        assert set(encoded.section_bytes) == {
            "header",
            "meta",
            "fingerprint",
            "base",
            "details",
            "directory",
        }

    def test_deterministic(self, rng: np.random.Generator) -> None:
        cloud = _rgb_cloud(rng, 3, 80)

        first = bv_encode(cloud, 0, 3.0)
        second = bv_encode(cloud, 0, 3.0)

        assert first.data == second.data

    def test_raw_channels(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 70, channels=2)

        encoded = bv_encode(cloud, 0, 1e-6, colour_space="raw")

        np.testing.assert_allclose(
            bv_decode(encoded.data, cloud), cloud.attributes, atol=1e-4
        )

    def test_other_geometry_rejected(self, rng: np.random.Generator) -> None:
        cloud = _rgb_cloud(rng, 3, 60)
        other = _rgb_cloud(rng, 3, 61)
        encoded = bv_encode(cloud, 0, 1.0)

        assert geometry_fingerprint(cloud) != geometry_fingerprint(other)
        with pytest.raises(ChecksumError):
            bv_decode(encoded.data, other)

    def test_wrong_magic(self, rng: np.random.Generator) -> None:
        cloud = _rgb_cloud(rng, 3, 30)
        data = bytearray(bv_encode(cloud, 0, 1.0).data)
        data[:4] = b"BVPC"

        with pytest.raises(MagicMismatchError):
            bv_decode(bytes(data), cloud)

    def test_invalid_arguments(self, rng: np.random.Generator) -> None:
        cloud = _rgb_cloud(rng, 2, 20)

        with pytest.raises(ValueError):
            bv_encode(cloud, 0, 1.0, order=3)
        with pytest.raises(LevelRangeError):
            bv_encode(cloud, 3, 1.0)
        with pytest.raises(ValueError):
            bv_encode(cloud, 0, 1.0, colour_space="hsv")
        with pytest.raises(DimensionMismatchError):
            bv_encode(VoxelCloud(2, cloud.positions), 0, 1.0)


@pytest.mark.slow
class TestSurfaceClouds:
    """Order-2 coding of voxelized surfaces at depths 4 and 5."""

    @pytest.mark.parametrize("depth", [4, 5])
    @pytest.mark.parametrize("shape", SURFACES)
    def test_near_lossless(self, shape: str, depth: int) -> None:
        cloud = surface_cloud(shape, depth, seed=7)

        encoded = bv_encode(cloud, 0, 1e-6, order=2)
        decoded = bv_decode(encoded.data, cloud)

        assert sum(len(q) for q in encoded.quantized) == cloud.num_points
        np.testing.assert_array_equal(np.rint(decoded), cloud.attributes)

    @pytest.mark.parametrize("shape", SURFACES)
    def test_error_bounded_by_half_step(self, shape: str) -> None:
        cloud = surface_cloud(shape, 5, seed=0)

        encoded = bv_encode(cloud, 0, 4.0, order=2, colour_space="raw")
        decoded = bv_decode(encoded.data, cloud)

        rmse = np.sqrt(np.mean((decoded - cloud.attributes) ** 2))
        assert rmse <= 2.0


class TestSmooth:
    """Test cases for smooth."""

    @pytest.mark.parametrize("order", [1, 2])
    def test_finest_level_is_identity(
        self, rng: np.random.Generator, order: int
    ) -> None:
        cloud = random_cloud(rng, 3, 60)

        np.testing.assert_allclose(
            smooth(cloud, 3, order=order), cloud.attributes, atol=1e-9
        )

    def test_order_one_root_is_mean(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 60)

        values = smooth(cloud, 0, order=1)

        mean = cloud.attributes.mean(axis=0)
        np.testing.assert_allclose(values, np.broadcast_to(mean, values.shape))

    def test_error_decreases_with_level(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 100)
        f = cloud.attributes

        errors = [np.sum((smooth(cloud, level) - f) ** 2) for level in range(4)]

        assert all(a >= b - 1e-9 for a, b in zip(errors, errors[1:]))

    def test_level_out_of_range(self, rng: np.random.Generator) -> None:
        with pytest.raises(LevelRangeError):
            smooth(random_cloud(rng, 2, 10), 3)

    def test_continuous_across_block_faces(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 3, 150)
        hierarchy = build_hierarchy(build_octree(cloud), 2)
        level = 1
        coefficients = project(
            hierarchy.system(level, cloud.attributes), hierarchy.reductions[level]
        )
        face = rng.uniform(0.0, 1.0, size=(100, 3))
        face[:, 0] = 0.5
        below = face - [1e-12, 0.0, 0.0]
        above = face + [1e-12, 0.0, 0.0]
        shifts = hierarchy.shifts[level]

        left = evaluate_spline(coefficients, shifts, level, below)
        right = evaluate_spline(coefficients, shifts, level, above)

        assert np.max(np.abs(left - right)) <= 1e-9
