import hypothesis
import numpy as np
import pytest

from ringchain import ChainParams, band_edges

hypothesis.settings.register_profile(
    "default", max_examples=60, deadline=None
)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def params07():
    """Magnetic reference chain: cos(A*pi) = 0.7, alpha = 1."""
    return ChainParams.from_cos_flux(0.7, 1.0)


@pytest.fixture(scope="session")
def params06():
    """Magnetic chain matching the single-impurity curve plots."""
    return ChainParams.from_cos_flux(0.6, 1.0)


@pytest.fixture(scope="session")
def layout07(params07):
    return band_edges(params07, 25.0)


@pytest.fixture(scope="session")
def layout06(params06):
    return band_edges(params06, 12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
