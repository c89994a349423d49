"""Tests for the RLGR coder."""

import numpy as np
import pytest
from bv_shared import TruncatedStreamError
from conftest import laplacian_integers
from entropy_coding import (
    BitReader,
    BitWriter,
    rlgr_decode,
    rlgr_encode,
    to_signed,
    to_unsigned,
)


class TestBitIO:
    """Test cases for the bit writer and reader."""

    def test_mixed_fields(self) -> None:
        writer = BitWriter()
        writer.write_uint(5, 3)
        writer.write_unary(4)
        writer.write_ue(9)
        writer.write_bool(True)

        reader = BitReader(writer.to_bytes())

        assert reader.read_uint(3) == 5
        assert reader.read_unary() == 4
        assert reader.read_ue() == 9
        assert reader.read_bool() is True

    def test_reading_past_end(self) -> None:
        reader = BitReader(b"\xff")
        reader.read_uint(8)
        with pytest.raises(TruncatedStreamError):
            reader.read_uint(1)


class TestRlgr:
    """Test cases for rlgr_encode and rlgr_decode."""

    def test_sign_interleaving(self) -> None:
        assert [to_unsigned(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
        assert [to_signed(u) for u in range(5)] == [0, -1, 1, -2, 2]

    def test_all_zero_uses_run_mode(self) -> None:
        """A thousand zeros cost far fewer than a thousand bits."""
        data = rlgr_encode(np.zeros(1000, dtype=np.int64))

        assert 8 * len(data) < 100
        np.testing.assert_array_equal(rlgr_decode(data, 1000), np.zeros(1000))

    def test_empty(self) -> None:
        assert rlgr_encode([]) == b""
        assert len(rlgr_decode(b"", 0)) == 0

    def test_round_trip_laplacian(self, rng: np.random.Generator) -> None:
        """Random two-sided geometric sequences decode exactly."""
        for _ in range(1000):
            scale = rng.choice([0.1, 0.5, 2.0, 20.0])
            symbols = laplacian_integers(rng, scale, int(rng.integers(1, 120)))

            decoded = rlgr_decode(rlgr_encode(symbols), len(symbols))

            np.testing.assert_array_equal(decoded, symbols)

    def test_round_trip_large_magnitudes(self) -> None:
        """Values far beyond the Rice range go through the escape code."""
        symbols = np.array([0, 0, 10**7, -(10**9), 3, 0, 0, 0, 2**40, -1])

        decoded = rlgr_decode(rlgr_encode(symbols), len(symbols))

        np.testing.assert_array_equal(decoded, symbols)

    def test_code_length_grows_with_variance(self, rng: np.random.Generator) -> None:
        """Doubling the source scale never shortens the mean code length."""
        lengths = []
        for scale in (0.5, 1.0, 2.0, 4.0, 8.0):
            symbols = laplacian_integers(rng, scale, 20000)
            lengths.append(len(rlgr_encode(symbols)) / len(symbols))

        assert lengths == sorted(lengths)

    def test_truncated_stream(self, rng: np.random.Generator) -> None:
        symbols = laplacian_integers(rng, 10.0, 200)
        data = rlgr_encode(symbols)

        with pytest.raises(TruncatedStreamError):
            rlgr_decode(data[: len(data) // 2], len(symbols))
