import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qfrontier.core import Dataset  # noqa: E402


def cobb_douglas_data(rng, n, d, sigma_v=0.7, sigma_u=1.2):
    x = rng.uniform(1, 10, size=(n, d))
    f = np.prod(x ** (0.8 / np.arange(1, d + 1)), axis=1)
    y = f + sigma_v * rng.standard_normal(n) - np.abs(sigma_u * rng.standard_normal(n))
    return Dataset(x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@pytest.fixture
def make_data():
    return cobb_douglas_data
