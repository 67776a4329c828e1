import numpy as np
import pytest
from hypothesis import settings

from stcmc.chart import (
    EuclideanProvider,
    GraphicalSchwarzschildProvider,
    SchwarzschildProvider,
)

settings.register_profile("suite", max_examples=20, deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def euclid():
    return EuclideanProvider()


@pytest.fixture(scope="session")
def schw():
    return SchwarzschildProvider(1.0)


@pytest.fixture(scope="session")
def graphical():
    return GraphicalSchwarzschildProvider(1.0, [1.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def sample_points():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(6, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts * rng.uniform(15.0, 40.0, size=(6, 1))
