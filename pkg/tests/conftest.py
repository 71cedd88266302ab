import numpy as np
import pytest

from bellsim.directions import Direction3
from bellsim.quantum import QubitState


def random_direction(rng) -> Direction3:
    v = rng.normal(size=3)
    return Direction3.normalized(*v)


def random_qubit_state(rng) -> QubitState:
    re = rng.normal(size=2)
    im = rng.normal(size=2)
    v = re + 1j * im
    v /= np.linalg.norm(v)
    return QubitState(complex(v[0]), complex(v[1]))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
