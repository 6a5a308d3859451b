import numpy as np
import pytest

from sgsr.testimage import make_test_image


@pytest.fixture(scope="session")
def scene96():
    return make_test_image(96, 96)


@pytest.fixture(scope="session")
def scene256():
    return make_test_image(256, 256)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
