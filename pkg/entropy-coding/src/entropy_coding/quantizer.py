"""Uniform midtread scalar quantizer with an optional deadzone."""

from dataclasses import dataclass
from typing import overload

import numpy as np


@dataclass(frozen=True)
class QuantizerSpec:
    """Stepsize and deadzone of the uniform quantizer.

    With ``deadzone == 0`` the reconstruction error is at most ``stepsize / 2``;
    a positive deadzone zeroes every index with ``|q| <= deadzone`` and gives up
    that bound.
    """

    stepsize: float
    deadzone: int = 0

    def __post_init__(self) -> None:
        if not self.stepsize > 0:
            raise ValueError(f"stepsize must be positive, got {self.stepsize}")
        if self.deadzone < 0:
            raise ValueError(f"deadzone must be non-negative, got {self.deadzone}")

    @property
    def error_bounded(self) -> bool:
        return self.deadzone == 0


@overload
def quantize(x: float, spec: QuantizerSpec) -> int: ...


@overload
def quantize(x: np.ndarray, spec: QuantizerSpec) -> np.ndarray: ...


def quantize(x: float | np.ndarray, spec: QuantizerSpec) -> int | np.ndarray:
    """Round ``x / stepsize`` half away from zero, then apply the deadzone."""
    values = np.asarray(x, dtype=np.float64)
    q = (np.sign(values) * np.floor(np.abs(values) / spec.stepsize + 0.5)).astype(
        np.int64
    )
    if spec.deadzone:
        q = np.where(np.abs(q) <= spec.deadzone, 0, q)
    if np.ndim(x) == 0:
        return int(q)
    return q


@overload
def dequantize(q: int, spec: QuantizerSpec) -> float: ...


@overload
def dequantize(q: np.ndarray, spec: QuantizerSpec) -> np.ndarray: ...


def dequantize(q: int | np.ndarray, spec: QuantizerSpec) -> float | np.ndarray:
    """Reconstruction ``q * stepsize``."""
    if np.ndim(q) == 0:
        return float(q) * spec.stepsize
    return np.asarray(q, dtype=np.float64) * spec.stepsize
