import pytest

from pcgmum.models.schemas import GridSpec, PhysicalScale
from pcgmum.services.mum_config import build_symmetric


@pytest.fixture(scope="session")
def d3_config():
    """The d=3, Q=1, R=4 configuration used in the optical experiment"""
    return build_symmetric(3, 1, 4, [1, 2, 1])


@pytest.fixture(scope="session")
def lab_scale():
    return PhysicalScale(wavelength=632.8e-9, lens_spacing=0.29, pixel_pitch=8e-6)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec.symmetric(256)


@pytest.fixture(scope="session")
def full_grid():
    return GridSpec.symmetric(4096)
