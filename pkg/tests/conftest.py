import numpy as np
import pytest

from fdtlab import model as mm


@pytest.fixture(scope="session")
def ring6():
    return mm.build_ring(6)


@pytest.fixture(scope="session")
def ring_data(ring6):
    return mm.spectral_charges(ring6)


@pytest.fixture(scope="session")
def trans1(ring6):
    """Ring with the launch moved one site off the detector."""
    return mm.with_initial_state(ring6, mm.site_state(6, 1))


@pytest.fixture(scope="session")
def trans1_data(trans1):
    return mm.spectral_charges(trans1)


@pytest.fixture(scope="session")
def trans3(ring6):
    """Opposite-site launch; zero overlap with every detection amplitude pair."""
    return mm.with_initial_state(ring6, mm.site_state(6, 3))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260822)
