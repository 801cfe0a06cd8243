import numpy as np
import pytest

from scenereach.skeleton import Skeleton


@pytest.fixture(scope="session")
def skeleton():
    return Skeleton.from_template()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
