import json

import numpy as np
import pandas as pd
import pytest

from quench_accel.defs import FAST_TAUS
from quench_accel.dynamics.intensity_profiles import QuenchProfile
from quench_accel.exceptions import HeatingInferenceError, InvalidParamsError
from quench_accel.heating.inference import (
    HeatingRateEstimator,
    default_grid,
    infer_heating_rate,
    load_sigma_trace,
    synthesize_sigma_traces,
)
from quench_accel.heating.models import (
    GasSpec,
    LpnSpec,
    gas_heating_rate,
    lpn_heating,
    nitrogen_fraction_for_rate,
    photon_recoil_heating_rate,
    single_gas_heating_rate,
)
from quench_accel.model.params import reference_params

N2_MASS = 4.65e-26
TRUTH = 16e-3


@pytest.fixture(scope='module')
def estimator():
    return HeatingRateEstimator(reference_params())


def test_nitrogen_heating_rate(params):
    assert gas_heating_rate(params, GasSpec.nitrogen()) == pytest.approx(22.2e-3, rel=0.02)


def test_hydrogen_heating_rate(params):
    assert gas_heating_rate(params, GasSpec.hydrogen()) == pytest.approx(5.94e-3, rel=0.02)


def test_mixture_interpolates_and_inverts(params):
    n2 = gas_heating_rate(params, GasSpec.nitrogen())
    h2 = gas_heating_rate(params, GasSpec.hydrogen())
    mixed = gas_heating_rate(params, GasSpec.nitrogen_hydrogen(0.25))
    assert mixed == pytest.approx(0.25 * n2 + 0.75 * h2, rel=1e-12)
    x = nitrogen_fraction_for_rate(params, 16e-3)
    assert 0 < x < 1
    assert gas_heating_rate(params, GasSpec.nitrogen_hydrogen(x)) == pytest.approx(16e-3, rel=1e-12)
    with pytest.raises(InvalidParamsError):
        nitrogen_fraction_for_rate(params, 30e-3)


@pytest.mark.parametrize('field, factor, expected', [
    ('pressure', 2.0, 2.0),
    ('radius', 2.0, 0.5),
    ('density', 2.0, 0.5),
    ('gas_temperature', 4.0, 2.0),
])
def test_gas_heating_scaling(params, field, factor, expected):
    scaled = params.with_overrides(**{field: factor * getattr(params, field)})
    ratio = single_gas_heating_rate(scaled, N2_MASS) / single_gas_heating_rate(params, N2_MASS)
    assert ratio == pytest.approx(expected, rel=1e-12)


def test_gas_heating_grows_with_square_root_of_molecular_mass(params):
    ratio = single_gas_heating_rate(params, 4 * N2_MASS) / single_gas_heating_rate(params, N2_MASS)
    assert ratio == pytest.approx(2.0, rel=1e-12)


def test_gas_spec_validation():
    with pytest.raises(InvalidParamsError):
        GasSpec(((4.65e-26, 0.6), (3.3e-27, 0.6)))
    with pytest.raises(InvalidParamsError):
        GasSpec.from_config({'components': [{'mass': 4.65e-26}]})
    spec = GasSpec.from_config({'components': [{'mass': 4.65e-26, 'fraction': 1.0}]})
    assert spec == GasSpec.nitrogen()


def test_laser_phase_noise(params):
    lpn = lpn_heating(params, LpnSpec())
    assert lpn.psd == pytest.approx(7.376e-33, rel=0.01)
    assert lpn.energy_rate == pytest.approx(2.11e-31, rel=0.02)
    assert lpn.phonon_rate == pytest.approx(5.3e-2, rel=0.02)
    assert lpn.temp_rate == pytest.approx(1.53e-8, rel=0.02)
    assert lpn.energy_rate == pytest.approx(0.5 * params.mass * params.omega1 ** 4 * lpn.psd, rel=1e-12)
    assert lpn.temp_rate == pytest.approx(lpn.energy_rate / params.boltzmann, rel=1e-12)
    assert lpn.phonon_rate == pytest.approx(lpn.energy_rate / (params.hbar * params.omega1), rel=1e-12)
    assert lpn_heating(params, LpnSpec(freq_noise_psd=0.0)).temp_rate == 0.0
    # negligible next to the gas term
    assert lpn.temp_rate < 1e-3 * gas_heating_rate(params, GasSpec.nitrogen())


def test_laser_phase_noise_scaling(params):
    base = lpn_heating(params, LpnSpec())
    faster = lpn_heating(params.with_overrides(omega1=2 * params.omega1), LpnSpec())
    assert faster.energy_rate == pytest.approx(16 * base.energy_rate, rel=1e-12)
    farther = lpn_heating(params, LpnSpec(mirror_distance=2 * LpnSpec().mirror_distance))
    assert farther.psd == pytest.approx(4 * base.psd, rel=1e-12)
    assert farther.energy_rate == pytest.approx(4 * base.energy_rate, rel=1e-12)


def test_photon_recoil_is_neglected(params):
    assert photon_recoil_heating_rate(params) == 0.0


def test_noise_free_traces_recover_heating_rate(estimator):
    params = reference_params()
    traces = synthesize_sigma_traces(params, FAST_TAUS, TRUTH, noise=0.0, estimator=estimator)
    result = infer_heating_rate(traces, params, estimator=estimator)
    assert result.rate == pytest.approx(TRUTH, abs=0.25e-3)
    rate, uncertainty = result
    assert rate == result.rate and uncertainty == result.uncertainty


def test_objective_is_convex_around_true_rate(estimator):
    params = reference_params()
    traces = synthesize_sigma_traces(params, FAST_TAUS, TRUTH, noise=0.0, estimator=estimator)
    prepared = [(QuenchProfile.for_tau(params, tau), trace[:, 0], trace[:, 1]) for tau, trace in traces]
    chi2, n_points = estimator.objective(prepared)
    assert n_points == sum(len(trace) for _, trace in traces)
    i = int(np.argmin(np.abs(default_grid() - TRUTH)))
    assert int(np.argmin(chi2)) == i
    # ±2 mK/s around the minimum
    window = chi2[i - 8:i + 9]
    assert np.all(np.diff(window, 2) > 0)


def test_monte_carlo_recovery(estimator):
    params = reference_params()
    truth = TRUTH
    hits = 0
    for seed in range(50):
        traces = synthesize_sigma_traces(params, FAST_TAUS, truth, noise=0.05, seed=seed, estimator=estimator)
        result = infer_heating_rate(traces, params, estimator=estimator)
        hits += abs(result.rate - truth) <= 2e-3
    assert hits >= 45


def test_minimum_on_grid_boundary_raises(estimator):
    params = reference_params()
    traces = synthesize_sigma_traces(params, FAST_TAUS[:1], 0.0, noise=0.0, estimator=estimator)
    with pytest.raises(HeatingInferenceError) as excinfo:
        infer_heating_rate(traces, params, estimator=estimator)
    assert excinfo.value.rate == 0.0


def test_inference_input_checks(estimator):
    params = reference_params()
    with pytest.raises(InvalidParamsError):
        estimator.infer([])
    profile = QuenchProfile.for_tau(params, FAST_TAUS[0])
    with pytest.raises(InvalidParamsError):
        estimator.infer([(profile, np.column_stack(([-1e-6, 0.0, 1e-6], [1e-12, 1e-12, 1e-12])))])
    with pytest.raises(InvalidParamsError):
        HeatingRateEstimator(params, grid=[0.0, 1e-3, 3e-3])


def test_load_sigma_trace_from_sidecar(tmp_path):
    path = tmp_path / 'sigma.csv'
    pd.DataFrame({'t_s': [0.0, 1e-6], 'sigma_m': [2e-12, 3e-12]}).to_csv(path, index=False)
    with open(str(path) + '.json', 'w') as f:
        json.dump({'tau_s': 1.95e-6}, f)
    tau, trace = load_sigma_trace(str(path))
    assert tau == pytest.approx(1.95e-6)
    assert trace.shape == (2, 2)
    (tmp_path / 'sigma.csv.json').unlink()
    with pytest.raises(InvalidParamsError):
        load_sigma_trace(str(path))
