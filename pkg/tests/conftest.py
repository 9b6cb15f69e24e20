import numpy as np
import pytest

from slitqubit.fixtures import reference_geometry


@pytest.fixture
def geom():
    """Double slit at z = 1.8 f."""
    return reference_geometry()


@pytest.fixture
def focal(geom):
    return geom.with_z(geom.focal_length)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
