"""Adaptive run-length / Golomb-Rice (RLGR) coding of signed integers.

The coder switches between two modes driven by a backward-adapted parameter
``k``. With ``k == 0`` every symbol is Golomb-Rice coded; with ``k > 0`` runs of
``2^k`` zeros cost one bit and a shorter run is sent as a flag, its length in
``k`` bits and the nonzero symbol that ended it. The Golomb-Rice parameter
``kr`` adapts to the magnitude of the coded values. Both parameters are kept
scaled by ``2^SCALE`` so adaptation can move in fractional steps.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from bv_shared import TruncatedStreamError

from .bitio import BitReader, BitWriter

SCALE = 4
# Mode adaptation: zero in no-run mode, nonzero in no-run mode, full run, broken run.
UP_ZERO = 3
DOWN_NONZERO = 1
UP_RUN = 2
DOWN_RUN = 1
INITIAL_K = 1
INITIAL_KR = 2
MAX_K = 14
MAX_KR = 48
# Unary prefixes this long switch to an exponential-Golomb escape.
ESCAPE_PREFIX = 24


def to_unsigned(value: int) -> int:
    """Interleave signs: 0, -1, 1, -2, 2 ... map to 0, 1, 2, 3, 4 ..."""
    return 2 * value if value >= 0 else -2 * value - 1


def to_signed(value: int) -> int:
    return value >> 1 if value % 2 == 0 else -((value + 1) >> 1)


@dataclass
class _AdaptiveState:
    k_scaled: int = INITIAL_K << SCALE
    kr_scaled: int = INITIAL_KR << SCALE

    @property
    def k(self) -> int:
        return self.k_scaled >> SCALE

    @property
    def kr(self) -> int:
        return self.kr_scaled >> SCALE

    def after_symbol(self, value: int) -> None:
        if value == 0:
            self.k_scaled = min(self.k_scaled + UP_ZERO, MAX_K << SCALE)
        else:
            self.k_scaled = max(self.k_scaled - DOWN_NONZERO, 0)

    def after_full_run(self) -> None:
        self.k_scaled = min(self.k_scaled + UP_RUN, MAX_K << SCALE)

    def after_broken_run(self) -> None:
        self.k_scaled = max(self.k_scaled - DOWN_RUN, 0)

    def after_rice(self, value: int) -> None:
        prefix = value >> self.kr
        if prefix == 0:
            self.kr_scaled = max(self.kr_scaled - 2, 0)
        elif prefix > 1:
            self.kr_scaled = min(self.kr_scaled + prefix + 1, MAX_KR << SCALE)


def _write_rice(writer: BitWriter, value: int, state: _AdaptiveState) -> None:
    kr = state.kr
    prefix = value >> kr
    if prefix < ESCAPE_PREFIX:
        writer.write_unary(prefix)
        writer.write_uint(value, kr)
    else:
        writer.write_uint((1 << ESCAPE_PREFIX) - 1, ESCAPE_PREFIX)
        writer.write_ue(value - (ESCAPE_PREFIX << kr))
    state.after_rice(value)


def _read_rice(reader: BitReader, state: _AdaptiveState) -> int:
    kr = state.kr
    prefix = reader.read_unary(limit=ESCAPE_PREFIX)
    if prefix < ESCAPE_PREFIX:
        value = (prefix << kr) | reader.read_uint(kr)
    else:
        value = reader.read_ue() + (ESCAPE_PREFIX << kr)
    state.after_rice(value)
    return value


def rlgr_encode(symbols: Iterable[int] | np.ndarray) -> bytes:
    """Encode signed integers; the count is not stored.

    Examples:
        >>> len(rlgr_encode([0] * 1000)) < 20
        True
    """
    values = [int(s) for s in np.asarray(symbols, dtype=np.int64).ravel()]
    writer = BitWriter()
    state = _AdaptiveState()
    n = len(values)
    i = 0
    while i < n:
        k = state.k
        if k == 0:
            mapped = to_unsigned(values[i])
            _write_rice(writer, mapped, state)
            state.after_symbol(mapped)
            i += 1
            continue

        run_limit = 1 << k
        run = 0
        while run < run_limit and i + run < n and values[i + run] == 0:
            run += 1
        if run == run_limit:
            writer.write_bool(False)
            state.after_full_run()
            i += run
            continue

        writer.write_bool(True)
        writer.write_uint(run, k)
        i += run
        if i < n:
            _write_rice(writer, to_unsigned(values[i]) - 1, state)
            i += 1
        state.after_broken_run()
    return writer.to_bytes()


def rlgr_decode(data: bytes, count: int) -> np.ndarray:
    """Decode ``count`` signed integers.

    Raises:
        TruncatedStreamError: If the stream ends early
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    reader = BitReader(data)
    state = _AdaptiveState()
    out = np.zeros(count, dtype=np.int64)
    i = 0
    while i < count:
        k = state.k
        if k == 0:
            mapped = _read_rice(reader, state)
            out[i] = to_signed(mapped)
            state.after_symbol(mapped)
            i += 1
            continue

        if not reader.read_bool():
            run_limit = 1 << k
            if i + run_limit > count:
                raise TruncatedStreamError("run extends past the symbol count")
            i += run_limit
            state.after_full_run()
            continue

        run = reader.read_uint(k)
        if i + run > count:
            raise TruncatedStreamError("run extends past the symbol count")
        i += run
        if i < count:
            out[i] = to_signed(_read_rice(reader, state) + 1)
            i += 1
        state.after_broken_run()
    return out
