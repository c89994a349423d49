"""Tests for the section container."""

import pytest
from bv_shared import (
    MagicMismatchError,
    SectionOverrunError,
    TruncatedStreamError,
    VersionMismatchError,
)
from entropy_coding import (
    HEADER_SIZE,
    ContainerHeader,
    pack_container,
    section_lengths,
    unpack_container,
)


class TestContainer:
    """Test cases for pack_container and unpack_container."""

    def setup_method(self) -> None:
        self.header = ContainerHeader(
            magic=b"BVPC", depth=7, start_level=2, stepsize=0.5, compressor_id=1
        )
        self.sections = [b"occupancy" * 20, b"", b"\x01\x02", b"levels", b"\x00"]

    def test_round_trip(self) -> None:
        data = pack_container(self.header, self.sections)

        header, sections, lengths = unpack_container(data, b"BVPC")

        assert header == self.header
        assert sections == self.sections
        assert HEADER_SIZE + sum(lengths) == len(data)

    def test_identity_codec_lengths(self) -> None:
        header = ContainerHeader(b"BVAT", 3, 0, 1.0, 0)

        data = pack_container(header, self.sections)

        assert len(data) == HEADER_SIZE + sum(len(s) for s in self.sections)

    def test_wrong_magic(self) -> None:
        data = pack_container(self.header, self.sections)

        with pytest.raises(MagicMismatchError):
            unpack_container(data, b"BVAT")

    def test_wrong_version(self) -> None:
        data = bytearray(pack_container(self.header, self.sections))
        data[4] = 99

        with pytest.raises(VersionMismatchError):
            unpack_container(bytes(data), b"BVPC")

    def test_section_overrun(self) -> None:
        data = pack_container(self.header, self.sections)

        with pytest.raises(SectionOverrunError):
            unpack_container(data[:-1], b"BVPC")
        with pytest.raises(SectionOverrunError):
            unpack_container(data + b"\x00", b"BVPC")

    def test_truncated_header(self) -> None:
        with pytest.raises(TruncatedStreamError):
            unpack_container(b"BVPC\x01", b"BVPC")

    def test_section_count(self) -> None:
        with pytest.raises(ValueError):
            pack_container(self.header, self.sections[:3])

    def test_section_lengths_match_unpack(self) -> None:
        data = pack_container(self.header, self.sections)

        _, _, lengths = unpack_container(data, b"BVPC")

        assert section_lengths(data) == lengths
