import numpy as np
import pytest

from mbelab.model import ModelParams, Pumping, default_params

# incommensurate off-resonant modes
QUASI_MODES = ((0.3, np.sqrt(2.0)), (0.2 - 0.1j, (1 + np.sqrt(5.0)) / 2))


@pytest.fixture
def params():
    return default_params(1e-2, 2.0)


@pytest.fixture
def pump():
    return Pumping(1.0)


@pytest.fixture
def quasi_pump():
    return Pumping(1.0, modes=QUASI_MODES)


@pytest.fixture
def off_resonant():
    return ModelParams.from_ratio(1e-2, 2.0, omega1=0.0, omega2=1.0, Omega=1.3)


def random_bloch(rng, n=None, inside=True):
    v = rng.standard_normal((n or 1, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if inside:
        v *= rng.uniform(0, 1, size=(v.shape[0], 1)) ** (1 / 3)
    return v if n else v[0]
