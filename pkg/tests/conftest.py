from __future__ import annotations

import numpy as np
import pytest

from noncomm_fourier.group_backend import SU2, Torus


@pytest.fixture
def su2():
    return SU2()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_su2_points(rng, n):
    """Haar-random elements in Euler angles (uniform alpha, gamma; cos beta uniform)."""
    alpha = rng.uniform(0, 2 * np.pi, n)
    beta = np.arccos(rng.uniform(-1, 1, n))
    gamma = rng.uniform(0, 4 * np.pi, n)
    return np.stack([alpha, beta, gamma], axis=-1)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


GROUPS = [SU2(), Torus(1), Torus(2), Torus(3)]
