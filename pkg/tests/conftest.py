import numpy as np
import pytest

from fairround.instances import GenConfig, generate
from fairround.rounding import FractionalAllocation


def random_point(n, m, rng, floor=1e-3):
    """Random assignment-polytope point with entries bounded away from 0."""
    x = rng.random((n, m)) + floor
    x /= x.sum(axis=0)
    return FractionalAllocation(x)


def random_instance(rng, n_range=(2, 4), m_range=(4, 8), family="mixed", seed_base=0):
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    seed = seed_base + int(rng.integers(1 << 30))
    return generate(GenConfig(family, n, m, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
