import numpy as np
import pytest

from helika import Config, GaussianPacket, build_box_grid, build_spherical_grid
from helika.frames import ALPHA
from helika.states import build_state
from helika.verify import standard_family

I_Z = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def config():
    return Config()


@pytest.fixture(scope="session")
def family(config):
    """The standard verification family; built once per session."""
    return standard_family(config)


@pytest.fixture(scope="session")
def family_map(family):
    return dict(family)


@pytest.fixture(scope="session")
def small_grid(config):
    """A quick 16^3 box for unit tests."""
    return build_box_grid((5.0, 0.0, 0.0), (2.7,) * 3, 16, I_Z, 0.0, config)


@pytest.fixture(scope="session")
def small_packet(small_grid):
    spec = GaussianPacket((5.0, 0.0, 0.0), (0.45,) * 3, tuple(ALPHA[+1]))
    return build_state(small_grid, spec, I_Z)


@pytest.fixture(scope="session")
def sphere_grid(config):
    return build_spherical_grid(3.8, 6.2, 12, 16, 24, I_Z, 0.0, config)
