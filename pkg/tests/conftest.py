import numpy as np
import pytest

from ifmcnot.core import PureState


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState((2,), v / np.linalg.norm(v))


def random_state(rng, dims):
    v = rng.normal(size=int(np.prod(dims))) + 1j * rng.normal(size=int(np.prod(dims)))
    return PureState(tuple(dims), v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
