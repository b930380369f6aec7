import numpy as np
import pytest


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic equidistributed unit directions (n, 3)."""
    i = np.arange(n, dtype=np.float64)
    golden = (1.0 + 5.0**0.5) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n
    theta = 2.0 * np.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
