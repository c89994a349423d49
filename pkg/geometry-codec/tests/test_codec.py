"""Tests for the geometry container, encoder and decoder."""

import numpy as np
import pytest
from bv_shared import ChecksumError, LevelRangeError, MagicMismatchError
from conftest import random_cloud, sphere_cloud
from entropy_coding import HEADER_SIZE
from geometry_codec import (
    SECTION_NAMES,
    decode_geometry,
    encode_geometry,
    parse_bitstream,
    parse_reconstruction,
    trilinear,
)
from voxel_core import build_octree


class TestEncodeGeometry:
    """Test cases for encode_geometry and decode_geometry."""

    def test_unpruned_is_lossless(self, rng: np.random.Generator) -> None:
        cloud = random_cloud(rng, 4, 300, with_normals=False)

        encoded = encode_geometry(cloud, start_level=1, pruning="none")
        decoded = decode_geometry(encoded.data)

        np.testing.assert_array_equal(decoded.positions, cloud.positions)
        assert encoded.pruned.num_bvs == 0
        assert encoded.wavelets.num_coefficients == 0

    def test_deterministic(self) -> None:
        cloud = sphere_cloud(5, 10.0)

        first = encode_geometry(cloud, start_level=2, pruning="zero:0")
        second = encode_geometry(cloud, start_level=2, pruning="zero:0")

        assert first.data == second.data

    def test_section_bits_sum_to_stream(self) -> None:
        cloud = sphere_cloud(5, 10.0)

        encoded = encode_geometry(cloud, start_level=2, pruning="fixed:3")

        assert set(encoded.section_bits) == {"header", *SECTION_NAMES}
        assert sum(encoded.section_bits.values()) == 8 * len(encoded.data)
        assert encoded.bits_per_point == pytest.approx(
            8 * len(encoded.data) / cloud.num_points
        )

    def test_start_level_pruning_has_no_wavelets(self) -> None:
        """Cutting at the start level leaves only the start controls."""
        cloud = sphere_cloud(5, 10.0)

        encoded = encode_geometry(
            cloud, start_level=2, pruning="fixed:2", compressor="none"
        )
        stream = parse_bitstream(encoded.data)

        assert encoded.section_bits["wavelets"] == 0
        assert encoded.section_bits["directory"] == 0
        assert encoded.section_bits["start_controls"] > 0
        assert stream.wavelets.residual_q == []
        assert stream.pruned.num_bvs == build_octree(cloud).cube_blocks(2)

    def test_parsed_controls_match_encoder(self) -> None:
        cloud = sphere_cloud(5, 10.0)
        encoded = encode_geometry(cloud, start_level=2, pruning="zero:1")

        stream = parse_bitstream(encoded.data)

        np.testing.assert_array_equal(stream.wavelets.start_q, encoded.wavelets.start_q)
        for ours, theirs in zip(
            encoded.wavelets.reconstruction, stream.wavelets.reconstruction
        ):
            np.testing.assert_array_equal(ours, theirs)

    def test_fixed_pruning_stays_in_volumes(self) -> None:
        cloud = sphere_cloud(5, 10.0)
        octree = build_octree(cloud)

        decoded = decode_geometry(
            encode_geometry(cloud, start_level=2, pruning="fixed:3").data
        )

        assert decoded.num_points > 0
        blocks = {tuple(s) for s in octree.cube_shifts(3)}
        assert all(tuple(p >> 2) in blocks for p in decoded.positions)

    def test_sphere_surface_recovered(self) -> None:
        """Decoded voxels stay within a voxel or two of the original shell."""
        cloud = sphere_cloud(5, 10.0)

        for reconstruction in ("subdiv", "raycast:2"):
            decoded = decode_geometry(
                encode_geometry(
                    cloud, start_level=2, qstep=0.25, pruning="fixed:4"
                ).data,
                reconstruction=reconstruction,
            )
            centre = (32 - 1) / 2.0
            radius = np.linalg.norm(decoded.positions - centre, axis=1)
            assert decoded.num_points > cloud.num_points // 4
            assert np.median(np.abs(radius - 10.0)) <= 2.0

    def test_start_level_lowered_to_shallowest_volume(self) -> None:
        cloud = sphere_cloud(4, 5.0)

        encoded = encode_geometry(cloud, start_level=2, pruning="fixed:1")

        assert encoded.start_level == 1
        assert decode_geometry(encoded.data).num_points > 0

    def test_start_level_beyond_depth(self) -> None:
        with pytest.raises(LevelRangeError):
            encode_geometry(sphere_cloud(3, 2.5), start_level=4)

    def test_magic_mismatch(self) -> None:
        encoded = encode_geometry(sphere_cloud(3, 2.5), start_level=1)

        with pytest.raises(MagicMismatchError):
            decode_geometry(b"BVAT" + encoded.data[4:])

    def test_corrupt_occupancy(self) -> None:
        encoded = encode_geometry(
            sphere_cloud(4, 5.0), start_level=1, pruning="fixed:2", compressor="none"
        )
        corrupt = bytearray(encoded.data)
        corrupt[HEADER_SIZE] = 0

        with pytest.raises(ChecksumError):
            decode_geometry(bytes(corrupt))


class TestSharedFaces:
    """Neighbouring BVs agree on their common faces."""

    @pytest.mark.parametrize("qstep", [1.0, 2.0, 4.0])
    def test_face_values_agree(self, rng: np.random.Generator, qstep: float) -> None:
        cloud = sphere_cloud(5, 10.0)
        stream = parse_bitstream(
            encode_geometry(
                cloud, start_level=2, qstep=qstep, pruning="fixed:3"
            ).data
        )
        batch = next(b for b in stream.bezier_volumes() if b.level == 3)
        assert len(np.unique(batch.controls)) > 1
        rows = {tuple(s): i for i, s in enumerate(batch.shifts)}
        checked = 0
        for axis in range(3):
            step = np.eye(3, dtype=np.int64)[axis]
            for shift, i in rows.items():
                j = rows.get(tuple(np.array(shift) + step))
                if j is None:
                    continue
                face = rng.uniform(size=(100, 3))
                low, high = face.copy(), face.copy()
                low[:, axis], high[:, axis] = 1.0, 0.0
                ours = trilinear(batch.controls[[i]], low[None])
                theirs = trilinear(batch.controls[[j]], high[None])
                np.testing.assert_array_equal(ours, theirs)
                checked += 1
        assert checked > 0


class TestParseReconstruction:
    """Test cases for parse_reconstruction."""

    def test_methods(self) -> None:
        assert parse_reconstruction("subdiv") == ("subdiv", 0.0)
        assert parse_reconstruction("raycast") == ("raycast", 0.0)
        assert parse_reconstruction("raycast:2.5") == ("raycast", 2.5)

    @pytest.mark.parametrize(
        "text", ["marching", "raycast:-1", "raycast:x", "subdiv:1"]
    )
    def test_invalid(self, text: str) -> None:
        with pytest.raises(ValueError):
            parse_reconstruction(text)
