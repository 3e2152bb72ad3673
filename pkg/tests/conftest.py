import numpy as np
import pytest

from cyclecurve import construct_problem


def circle(n, radius=1.5, phase=0.3):
    return [radius * np.exp(1j * (2 * np.pi * k / n + phase)) for k in range(n)]


@pytest.fixture
def small_standard():
    """A well-conditioned standard construction (n = 12, m = 3, q = 3)."""
    return construct_problem(12, 3, [1.0, 0.6, 0.3, 0.1], circle(12), seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
