import pytest

from quench_accel.defs import REFERENCE_TAUS
from quench_accel.dynamics.intensity_profiles import QuenchProfile, StepProfile
from quench_accel.model.params import reference_params


@pytest.fixture
def params():
    return reference_params()


@pytest.fixture
def step_profile(params):
    return StepProfile.for_params(params)


@pytest.fixture
def fast_profile(params):
    return QuenchProfile.for_tau(params, REFERENCE_TAUS[0])
