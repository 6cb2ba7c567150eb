import numpy as np
import pytest

from cpmagnus import effective_series, oscillator_model, project_series, two_level_model

TL_PARAMS = dict(omega0=1.3, omega_s=0.7, omega_c=0.45, gamma=0.25, omega=1.0)
OSC_PARAMS = dict(omega0=1.0, amplitude=0.125, gamma=0.015625, omega=1.0, n_dim=12)


@pytest.fixture(scope="session")
def tl_model():
    return two_level_model(**TL_PARAMS)


@pytest.fixture(scope="session")
def tl_decomposition(tl_model):
    series = effective_series(tl_model, 3)
    return project_series(series, tl_model.projection_basis(3))


@pytest.fixture(scope="session")
def osc_model():
    return oscillator_model(**OSC_PARAMS)


@pytest.fixture(scope="session")
def osc_series3(osc_model):
    return effective_series(osc_model, 3)


@pytest.fixture(scope="session")
def osc_decomposition3(osc_model, osc_series3):
    return project_series(osc_series3, osc_model.projection_basis(3),
                          support=osc_model.projection_support(3))


@pytest.fixture(scope="session")
def osc_decomposition2(osc_model):
    series = effective_series(osc_model, 2)
    return project_series(series, osc_model.projection_basis(2),
                          support=osc_model.projection_support(2))


def rng(seed=0):
    return np.random.default_rng(seed)


def random_hermitian(generator, d, scale=1.0):
    m = generator.normal(size=(d, d)) + 1j * generator.normal(size=(d, d))
    return scale * 0.5 * (m + m.conj().T)
