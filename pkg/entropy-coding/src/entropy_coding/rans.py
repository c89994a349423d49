"""Range asymmetric numeral systems (rANS) with static per-level models.

The coder keeps a 32-bit state in ``[2^16, 2^32)``, renormalizes 16 bits at a
time and uses frequencies normalized to ``2^14``. Symbols with magnitude above
``ALPHABET_LIMIT`` are sent as an escape symbol plus a raw little-endian int64.

Payload layout (all little-endian)::

    u32 escape count | int64 escapes | u32 final state | u16 words
"""

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from bv_shared import ChecksumError, ModelError, TruncatedStreamError

PRECISION = 14
TOTAL = 1 << PRECISION
STATE_LOW = 1 << 16
ALPHABET_LIMIT = 255
ESCAPE = -(1 << 15)


def _to_model_symbols(values: np.ndarray) -> np.ndarray:
    return np.where(np.abs(values) > ALPHABET_LIMIT, ESCAPE, values)


@dataclass(frozen=True)
class RansModel:
    """Normalized frequency table of one octree level.

    Attributes:
        symbols: Sorted model symbols; ``ESCAPE`` stands for any |s| > 255
        freqs: Frequencies summing to ``TOTAL``, all positive
        level: Octree level the model belongs to
    """

    symbols: tuple[int, ...]
    freqs: tuple[int, ...]
    level: int = 0
    _index: dict[int, int] = field(init=False, repr=False, compare=False)
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)
    _slots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.symbols) != len(self.freqs) or not self.symbols:
            raise ModelError("model needs one positive frequency per symbol")
        if any(f <= 0 for f in self.freqs) or sum(self.freqs) != TOTAL:
            raise ModelError(f"frequencies must be positive and sum to {TOTAL}")
        if list(self.symbols) != sorted(set(self.symbols)):
            raise ModelError("model symbols must be unique and sorted")
        freqs = np.array(self.freqs, dtype=np.int64)
        object.__setattr__(
            self, "_index", {s: i for i, s in enumerate(self.symbols)}
        )
        object.__setattr__(
            self, "_cumulative", np.concatenate(([0], np.cumsum(freqs)[:-1]))
        )
        object.__setattr__(self, "_slots", np.repeat(np.arange(len(freqs)), freqs))

    @property
    def has_escape(self) -> bool:
        return ESCAPE in self._index

    @classmethod
    def from_symbols(
        cls, values: Iterable[int] | np.ndarray, level: int = 0
    ) -> "RansModel":
        """Fit a model to the empirical histogram of ``values``."""
        data = _to_model_symbols(np.asarray(values, dtype=np.int64).ravel())
        if data.size == 0:
            return cls((0,), (TOTAL,), level)
        symbols, counts = np.unique(data, return_counts=True)
        scaled = counts * TOTAL / counts.sum()
        freqs = np.maximum(1, np.floor(scaled)).astype(np.int64)
        deficit = TOTAL - int(freqs.sum())
        if deficit > 0:
            # largest remainders first
            order = np.argsort(np.floor(scaled) - scaled, kind="stable")
            freqs[order[:deficit]] += 1
        while deficit < 0:
            largest = int(np.argmax(freqs))
            take = min(-deficit, int(freqs[largest]) - 1)
            freqs[largest] -= take
            deficit += take
        return cls(tuple(int(s) for s in symbols), tuple(int(f) for f in freqs), level)

    def frequency(self, symbol: int) -> int:
        index = self._index.get(symbol)
        return 0 if index is None else self.freqs[index]

    def cross_entropy_bits(self, values: Iterable[int] | np.ndarray) -> float:
        """Ideal code length of ``values`` under this model, escapes excluded."""
        data = _to_model_symbols(np.asarray(values, dtype=np.int64).ravel())
        total = 0.0
        for symbol, count in zip(*np.unique(data, return_counts=True)):
            freq = self.frequency(int(symbol))
            if freq == 0:
                return math.inf
            total += -count * math.log2(freq / TOTAL)
        return total

    def to_bytes(self) -> bytes:
        """Sparse table: u8 level, u16 entries, then (i16 symbol, u16 freq) pairs."""
        out = bytearray(struct.pack("<BH", self.level & 0xFF, len(self.symbols)))
        for symbol, freq in zip(self.symbols, self.freqs):
            out += struct.pack("<hH", symbol, freq)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["RansModel", int]:
        """Parse a table written by :meth:`to_bytes`.

        Returns:
            The model and the offset just past its table
        """
        try:
            level, entries = struct.unpack_from("<BH", data, offset)
            offset += 3
            pairs = [
                struct.unpack_from("<hH", data, offset + 4 * i) for i in range(entries)
            ]
        except struct.error as exc:
            raise TruncatedStreamError("rANS model table is truncated") from exc
        symbols = tuple(p[0] for p in pairs)
        freqs = tuple(p[1] for p in pairs)
        return cls(symbols, freqs, level), offset + 4 * entries


def rans_encode(symbols: Iterable[int] | np.ndarray, model: RansModel) -> bytes:
    """Encode signed integers with a static model.

    Raises:
        ModelError: If a symbol has zero frequency and no escape covers it
    """
    values = np.asarray(symbols, dtype=np.int64).ravel()
    mapped = _to_model_symbols(values)
    escapes = values[mapped == ESCAPE]
    if escapes.size and not model.has_escape:
        raise ModelError("model has no escape symbol for large magnitudes")

    index = model._index
    try:
        positions = [index[int(s)] for s in mapped]
    except KeyError as exc:
        raise ModelError(f"symbol {exc.args[0]} has zero frequency") from exc

    freqs = model.freqs
    cumulative = model._cumulative
    state = STATE_LOW
    words: list[int] = []
    for position in reversed(positions):
        freq = freqs[position]
        limit = ((STATE_LOW >> PRECISION) << 16) * freq
        while state >= limit:
            words.append(state & 0xFFFF)
            state >>= 16
        start = int(cumulative[position])
        state = ((state // freq) << PRECISION) + (state % freq) + start
    words.reverse()

    out = bytearray(struct.pack("<I", len(escapes)))
    out += escapes.astype("<i8").tobytes()
    out += struct.pack("<I", state)
    out += np.asarray(words, dtype="<u2").tobytes()
    return bytes(out)


def rans_decode(data: bytes, model: RansModel, count: int) -> np.ndarray:
    """Decode ``count`` symbols.

    Raises:
        TruncatedStreamError: If the payload ends early
        ChecksumError: If the final state or leftover words are inconsistent
    """
    try:
        (escape_count,) = struct.unpack_from("<I", data, 0)
    except struct.error as exc:
        raise TruncatedStreamError("rANS payload header is truncated") from exc
    escape_end = 4 + 8 * escape_count
    if len(data) < escape_end + 4:
        raise TruncatedStreamError("rANS escape block or state is truncated")
    escapes = np.frombuffer(data[4:escape_end], dtype="<i8")
    (state,) = struct.unpack_from("<I", data, escape_end)
    body = data[escape_end + 4 :]
    if len(body) % 2:
        raise TruncatedStreamError("rANS word stream has an odd byte count")
    words = np.frombuffer(body, dtype="<u2")

    symbols = model.symbols
    freqs = model.freqs
    cumulative = model._cumulative
    slots = model._slots
    out = np.empty(count, dtype=np.int64)
    cursor = 0
    next_escape = 0
    for i in range(count):
        slot = state & (TOTAL - 1)
        position = int(slots[slot])
        start = int(cumulative[position])
        state = freqs[position] * (state >> PRECISION) + slot - start
        while state < STATE_LOW:
            if cursor >= len(words):
                raise TruncatedStreamError("rANS payload ended before all symbols")
            state = (state << 16) | int(words[cursor])
            cursor += 1
        symbol = symbols[position]
        if symbol == ESCAPE:
            if next_escape >= len(escapes):
                raise ChecksumError("rANS payload references a missing escape value")
            symbol = int(escapes[next_escape])
            next_escape += 1
        out[i] = symbol

    if state != STATE_LOW or cursor != len(words) or next_escape != len(escapes):
        raise ChecksumError("rANS payload failed its end-of-stream check")
    return out


def encode_level(symbols: Iterable[int] | np.ndarray, level: int) -> bytes:
    """Model table followed by the rANS payload of one level."""
    values = np.asarray(symbols, dtype=np.int64).ravel()
    model = RansModel.from_symbols(values, level)
    return model.to_bytes() + rans_encode(values, model)


def decode_level(data: bytes, count: int) -> tuple[np.ndarray, RansModel]:
    """Inverse of :func:`encode_level`."""
    model, offset = RansModel.from_bytes(data)
    return rans_decode(data[offset:], model, count), model
