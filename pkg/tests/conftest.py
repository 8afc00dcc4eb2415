"""Shared fixtures: backgrounds, reference configurations, seeded RNG."""
import numpy as np
import pytest

from tzsoliton.dressing import SolitonConfig
from tzsoliton.grid import GridSpec
from tzsoliton.spectral_curve import VacuumBackground

SEED = 20260817


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def vacuum():
    return VacuumBackground()


@pytest.fixture
def one_soliton():
    # complex C keeps the real-plane det zeros away from small windows
    return SolitonConfig.canonical([1.0], [1j])


@pytest.fixture
def two_soliton():
    return SolitonConfig.canonical([1.0, 2.2], [1j, 1.0 + 0.5j])


@pytest.fixture
def clean_window():
    # singularity-free for the one_soliton fixture; fine enough for stencils
    return GridSpec(0.0, 2.0, 0.0, 2.0, 21, 21)
