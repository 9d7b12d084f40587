"""Shared fixtures: reference parameter sets and session-scoped orbits."""

import pytest

from conveyor import periodic
from conveyor.model import default_params

# independently derived anchors (long-run integration with an external RK
# integrator until transients decayed, then Newton on the period map)
Z_STAR_LORENTZIAN = 0.638748527317
MU_LORENTZIAN = 0.953867115
Z_STAR_GAUSSIAN = 0.224601844138
MU_GAUSSIAN = 0.167144377


@pytest.fixture(scope="session")
def lorentzian_params():
    return default_params("lorentzian")


@pytest.fixture(scope="session")
def gaussian_params():
    return default_params("gaussian")


@pytest.fixture(scope="session")
def plane_params():
    return default_params("plane")


@pytest.fixture(scope="session")
def lorentzian_orbit(lorentzian_params):
    return periodic.find_periodic(lorentzian_params, 0.0)


@pytest.fixture(scope="session")
def gaussian_orbit(gaussian_params):
    return periodic.find_periodic(gaussian_params, 0.0)
