import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trigsos.fourier import TrigPoly

settings.register_profile("trigsos", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("trigsos")


def cosine(dim=1, axis=0, freq=1):
    w = [0] * dim
    w[axis] = freq
    m = [-v for v in w]
    return TrigPoly(dim, {tuple(w): 0.5, tuple(m): 0.5})


@pytest.fixture
def cos1():
    return cosine()


@pytest.fixture
def onemincos():
    return 1.0 - cosine()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
