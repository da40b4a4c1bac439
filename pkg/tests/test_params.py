import math

import pytest

from quench_accel.exceptions import ConfigError, InvalidParamsError
from quench_accel.model.params import (
    PhysicalParams,
    acceleration_from_tilt,
    derive,
    quench_displacement,
    reference_params,
    static_displacement,
)


def test_derived_scalars_of_reference_configuration(params):
    scalars = derive(params)
    assert scalars.kappa == pytest.approx(3.5)
    assert scalars.freq_ratio_sq == pytest.approx((250 / 5.97) ** 2, rel=1e-12)
    assert scalars.freq_ratio_sq == pytest.approx(1.7537e3, rel=1e-4)
    assert scalars.zero_point_z == pytest.approx(1.08e-12, rel=0.01)


def test_zero_point_product_is_half_hbar(params):
    scalars = derive(params)
    assert scalars.zero_point_z * scalars.zero_point_p == pytest.approx(params.hbar / 2, rel=1e-12)


def test_gamma_reproduces_heating_rate(params):
    scalars = derive(params)
    assert scalars.gamma_damping * params.gas_temperature == pytest.approx(params.heating_rate, rel=1e-15)
    assert scalars.gamma_damping == pytest.approx(4.5e-5, rel=0.01)


def test_derive_is_deterministic(params):
    assert derive(params) == derive(reference_params())


@pytest.mark.parametrize('field, value, fragment', [
    ('mass', 0.0, 'mass > 0'),
    ('radius', -1e-9, 'radius > 0'),
    ('pressure', -1.0, 'pressure >= 0'),
    ('nbar', -0.5, 'nbar >= 0'),
    ('heating_rate', -1e-3, 'heating_rate >= 0'),
    ('gas_temperature', 0.0, 'gas_temperature > 0'),
])
def test_invalid_fields_name_the_invariant(params, field, value, fragment):
    with pytest.raises(InvalidParamsError, match=fragment):
        params.with_overrides(**{field: value})


def test_quench_must_lower_the_frequency(params):
    with pytest.raises(InvalidParamsError, match='omega0 > omega1'):
        params.with_overrides(omega1=params.omega0 * 2)


def test_static_displacement():
    assert static_displacement(0.0, 123.0) == 0.0
    assert static_displacement(9.8, 2 * math.pi * 5970) == pytest.approx(6.97e-9, rel=1e-3)
    assert static_displacement(3 * 9.8, 1e4) == pytest.approx(3 * static_displacement(9.8, 1e4))
    with pytest.raises(InvalidParamsError):
        static_displacement(1.0, 0.0)


def test_quench_displacement(params):
    a = 9.8 * math.sin(math.radians(-2.99))
    assert quench_displacement(params.with_overrides(gravity=9.8), a) == pytest.approx(-3.6e-10, rel=0.02)


def test_acceleration_from_tilt_includes_lattice_offset(params):
    assert acceleration_from_tilt(params, -params.theta0) == pytest.approx(0.0, abs=1e-15)
    assert acceleration_from_tilt(params, 0.0) == pytest.approx(params.gravity * math.sin(params.theta0))


def test_from_config_converts_units(params):
    section = {'radius': 150, 'omega0': 200, 'chi': 20, 'heating_rate': 6,
               'units': {'radius': 'nm', 'omega0': 'kHz', 'chi': 'pm', 'heating_rate': 'mK/s'}}
    converted = PhysicalParams.from_config(section, params)
    assert converted.radius == pytest.approx(150e-9)
    assert converted.omega0 == pytest.approx(2 * math.pi * 200e3)
    assert converted.chi == pytest.approx(20e-12)
    assert converted.heating_rate == pytest.approx(6e-3)
    assert converted.mass == params.mass


def test_from_config_rejects_unknown_fields_and_units(params):
    with pytest.raises(ConfigError) as excinfo:
        PhysicalParams.from_config({'colour': 1, 'radius': 1, 'units': {'radius': 'furlong'}}, params)
    problems = ' '.join(excinfo.value.problems)
    assert 'colour' in problems
    assert 'furlong' in problems


def test_to_config_round_trips_through_from_config(params):
    assert PhysicalParams.from_config(params.to_config()) == params
