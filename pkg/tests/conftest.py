import math

import numpy as np
import pytest

from hyperent.hilbert import StateVector

S2 = 1 / math.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, dim):
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(z / np.linalg.norm(z))


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
