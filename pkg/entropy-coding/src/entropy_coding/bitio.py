"""MSB-first bit writer and reader."""

from bv_shared import TruncatedStreamError


class BitWriter:
    """Accumulates bits most significant first and pads the last byte with zeros."""

    __slots__ = ("_buffer", "_acc", "_pending", "_bits_written")

    def __init__(self) -> None:
        self._buffer = bytearray()
        self._acc = 0
        self._pending = 0
        self._bits_written = 0

    @property
    def bit_length(self) -> int:
        return self._bits_written

    def write_uint(self, value: int, bits: int) -> None:
        """Writes the low ``bits`` bits of a non-negative integer."""
        if bits <= 0:
            return
        self._acc = (self._acc << bits) | (value & ((1 << bits) - 1))
        self._pending += bits
        self._bits_written += bits
        while self._pending >= 8:
            self._pending -= 8
            self._buffer.append((self._acc >> self._pending) & 0xFF)
        self._acc &= (1 << self._pending) - 1

    def write_bool(self, value: bool) -> None:
        self.write_uint(int(value), 1)

    def write_unary(self, count: int) -> None:
        """Writes ``count`` one bits followed by a zero."""
        while count >= 32:
            self.write_uint(0xFFFFFFFF, 32)
            count -= 32
        self.write_uint(((1 << count) - 1) << 1, count + 1)

    def write_ue(self, value: int) -> None:
        """Writes an unsigned order-0 exponential-Golomb code."""
        bits = (value + 1).bit_length() * 2 - 1
        self.write_uint(value + 1, bits)

    def to_bytes(self) -> bytes:
        if self._pending:
            tail = (self._acc << (8 - self._pending)) & 0xFF
            return bytes(self._buffer) + bytes([tail])
        return bytes(self._buffer)


class BitReader:
    """Reads bits most significant first; running past the end is an error."""

    __slots__ = ("_data", "_pos", "_limit")

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0
        self._limit = 8 * len(data)

    @property
    def position(self) -> int:
        return self._pos

    def read_uint(self, bits: int) -> int:
        if bits <= 0:
            return 0
        end = self._pos + bits
        if end > self._limit:
            raise TruncatedStreamError(
                f"bitstream ended after {self._limit} bits, {end} needed"
            )
        first_byte = self._pos >> 3
        last_byte = (end + 7) >> 3
        chunk = int.from_bytes(self._data[first_byte:last_byte], "big")
        chunk >>= (last_byte << 3) - end
        self._pos = end
        return chunk & ((1 << bits) - 1)

    def read_bool(self) -> bool:
        return bool(self.read_uint(1))

    def read_unary(self, limit: int | None = None) -> int:
        """Counts one bits up to the terminating zero, or up to ``limit`` ones."""
        count = 0
        while limit is None or count < limit:
            if not self.read_uint(1):
                return count
            count += 1
        return count

    def read_ue(self) -> int:
        leading = 0
        while not self.read_uint(1):
            leading += 1
        return ((1 << leading) | self.read_uint(leading)) - 1
