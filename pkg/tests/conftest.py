import numpy as np
import pytest

from hdrec.phantoms import make_disk_pack_phantom, make_shepp_logan
from hdrec.projector import Geometry, beer_transmit, make_angles, siddon_project


@pytest.fixture(scope="session")
def shepp64():
    return make_shepp_logan(64)


@pytest.fixture(scope="session")
def disk64():
    return make_disk_pack_phantom(64, 64, 5, 0.005, 0.02, 3)


@pytest.fixture(scope="session")
def small_geometry():
    return Geometry(96, make_angles(90))


@pytest.fixture(scope="session")
def disk64_transmission(disk64, small_geometry):
    return beer_transmit(siddon_project(disk64, small_geometry))


def rand_image(shape, seed, lo=0.0, hi=1.0):
    gen = np.random.default_rng(seed)
    return gen.uniform(lo, hi, size=shape)
