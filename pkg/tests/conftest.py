import numpy as np
import pytest

from rnss import EvaluationDomain, SharingParams

EXAMPLE_POINTS = (0.5, 0.65, 0.8, 0.95, 1.1, 1.25, 1.4, 1.55, 1.7, 1.85, 2.0)


@pytest.fixture
def grid11():
    return EvaluationDomain.grid(11, 5)


@pytest.fixture
def small():
    return EvaluationDomain.grid(5, 2)


@pytest.fixture
def params():
    return SharingParams(sigma2_y=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
