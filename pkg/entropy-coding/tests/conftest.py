"""Shared fixtures for entropy-coding tests."""

import numpy as np
import pytest


def laplacian_integers(rng: np.random.Generator, scale: float, size: int) -> np.ndarray:
    """Rounded Laplacian samples, a two-sided geometric source."""
    return np.rint(rng.laplace(0.0, scale, size=size)).astype(np.int64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
