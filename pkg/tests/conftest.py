import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from thermoreg.gaussian import GaussianBelief
from thermoreg.vonmises import VonMisesBelief

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

finite_mu = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
log_tau = st.floats(min_value=math.log(0.01), max_value=math.log(100.0))


@st.composite
def gaussians(draw):
    return GaussianBelief(draw(finite_mu), math.exp(draw(log_tau)))


@st.composite
def von_mises(draw, log_kappa_range=(-2.0, 3.0)):
    mu = draw(st.floats(min_value=-math.pi, max_value=math.pi, exclude_max=True))
    return VonMisesBelief(mu, math.exp(draw(st.floats(*log_kappa_range))))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
