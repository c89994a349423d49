"""Tests for VoxelCloud and voxelize."""

import numpy as np
import pytest
from bv_shared import EmptyCloudError, LevelRangeError
from voxel_core import VoxelCloud, voxelize


class TestVoxelize:
    """Test cases for voxelize."""

    def test_single_point(self) -> None:
        """One point becomes one voxel with its attributes."""
        cloud = voxelize(np.array([[2.7, 0.2, 3.9]]), np.array([[5.0, 6.0]]), 2)

        np.testing.assert_array_equal(cloud.positions, [[2, 0, 3]])
        np.testing.assert_array_equal(cloud.attributes, [[5.0, 6.0]])

    def test_duplicates_merge_to_mean(self) -> None:
        """Two points in one voxel average their attributes."""
        points = np.array([[1.2, 1.1, 1.0], [1.9, 1.5, 1.7]])

        cloud = voxelize(points, np.array([[10.0], [20.0]]), 2)

        assert cloud.num_points == 1
        assert cloud.attributes[0, 0] == pytest.approx(15.0)

    def test_declared_cube(self) -> None:
        """Points are scaled from the declared cube and floored."""
        points = np.array([[-1.0, -1.0, -1.0], [0.99, 0.0, -0.26]])

        cloud = voxelize(points, None, 3, origin=np.array([-1.0, -1.0, -1.0]), size=2.0)

        assert {tuple(p) for p in cloud.positions} == {(0, 0, 0), (7, 4, 2)}

    def test_output_is_morton_sorted(self) -> None:
        """Voxels come out strictly increasing in Morton order."""
        rng = np.random.default_rng(3)
        points = rng.uniform(0, 16, size=(500, 3))

        cloud = voxelize(points, rng.normal(size=(500, 3)), 4)

        assert np.all(np.diff(cloud.morton_codes) > 0)

    def test_normals_renormalized(self) -> None:
        """Merged normals are unit length."""
        points = np.array([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2]])
        normals = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

        cloud = voxelize(points, None, 1, normals=normals)

        assert cloud.normals is not None
        np.testing.assert_allclose(cloud.normals, [[np.sqrt(0.5), np.sqrt(0.5), 0.0]])

    def test_empty_input(self) -> None:
        """No points is an empty-cloud error."""
        with pytest.raises(EmptyCloudError):
            voxelize(np.zeros((0, 3)), None, 4)

    def test_outside_cube(self) -> None:
        """Points beyond the cube are rejected."""
        with pytest.raises(LevelRangeError):
            voxelize(np.array([[16.0, 0.0, 0.0]]), None, 4)


class TestVoxelCloud:
    """Test cases for VoxelCloud validation."""

    def test_rejects_unsorted(self) -> None:
        """Positions must be strictly increasing in Morton order."""
        with pytest.raises(ValueError):
            VoxelCloud(1, np.array([[1, 0, 0], [0, 0, 0]]))

    def test_rejects_duplicates(self) -> None:
        """Duplicate positions are rejected even when sorted."""
        with pytest.raises(ValueError):
            VoxelCloud.from_unsorted(1, np.array([[1, 0, 0], [1, 0, 0]]))

    def test_rejects_non_unit_normals(self) -> None:
        """Normals must be unit length."""
        with pytest.raises(ValueError):
            VoxelCloud(1, np.array([[0, 0, 0]]), normals=np.array([[0.0, 0.0, 2.0]]))

    def test_from_unsorted_reorders_attributes(self) -> None:
        """Attributes follow their voxels through the sort."""
        cloud = VoxelCloud.from_unsorted(
            1, np.array([[1, 1, 1], [0, 0, 0]]), np.array([[7.0], [3.0]])
        )

        np.testing.assert_array_equal(cloud.positions, [[0, 0, 0], [1, 1, 1]])
        np.testing.assert_array_equal(cloud.attributes[:, 0], [3.0, 7.0])
        assert cloud.num_channels == 1

    def test_with_normals(self) -> None:
        """Normals can be attached after voxelization."""
        cloud = VoxelCloud(1, np.array([[0, 0, 0]]))
        assert not cloud.has_normals

        cloud = cloud.with_normals(np.array([[0.0, 0.0, 1.0]]))

        assert cloud.has_normals
