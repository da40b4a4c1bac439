import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from quench_accel.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, build_parser, main, overrides_from_args
from quench_accel.controllers.experiment_controller import ExperimentController
from quench_accel.defs import REFERENCE_TAUS
from quench_accel.dynamics.intensity_profiles import QuenchProfile
from quench_accel.exceptions import NumericalError
from quench_accel.measurement.shots import ShotSet


def run(command, out, *flags):
    return main([command, '--out', str(out), '--workers', '1', *flags])


def read_json(path):
    with open(path) as f:
        return json.load(f)


def test_flags_become_si_overrides():
    args = build_parser().parse_args(['sensitivity', '--tau-us', '2', '4', '--tilt-deg', '1',
                                      '--heating-mks', '16', '22', '--seed', '5'])
    overrides = overrides_from_args(args)
    assert overrides['sweep']['tau'] == pytest.approx([2e-6, 4e-6])
    assert overrides['profile']['tau'] == pytest.approx(2e-6)
    assert overrides['sweep']['tilt'] == pytest.approx([math.radians(1.0)])
    assert overrides['physical']['heating_rate'] == pytest.approx(16e-3)
    assert overrides['run']['seed'] == 5


def test_qfi_command_writes_report_and_manifest(tmp_path):
    assert run('qfi', tmp_path) == EXIT_OK
    report = read_json(tmp_path / 'qfi.json')
    assert report['F_Q_s4pm2'] == pytest.approx(4.984e5, rel=0.01)
    assert report['F_Q_relative_uncertainty'] == pytest.approx(0.0694, rel=0.05)
    assert report['dlnF_dlnomega0'] == pytest.approx(1.0, abs=0.01)
    assert report['dlnF_dlnomega1'] == pytest.approx(-4.0, abs=0.01)
    assert report['small_angle_bound'] >= report['small_angle_exact']
    manifest = read_json(tmp_path / 'manifest.json')
    assert manifest['command'] == 'qfi'
    assert manifest['seed'] == 0
    assert [entry['path'] for entry in manifest['files']] == ['qfi.json']


def test_rerun_reproduces_every_file(tmp_path):
    assert run('qfi', tmp_path, '--seed', '3') == EXIT_OK
    first = {name: (tmp_path / name).read_bytes() for name in ('qfi.json', 'manifest.json')}
    assert run('qfi', tmp_path, '--seed', '3') == EXIT_OK
    for name, content in first.items():
        assert (tmp_path / name).read_bytes() == content


def test_sensitivity_rerun_with_worker_pool_is_reproducible(tmp_path):
    flags = ('--tau-us', '1.95', '3.77', '--seed', '7', '--workers', '2')
    assert run('sensitivity', tmp_path / 'pool', *flags) == EXIT_OK
    names = sorted(os.listdir(tmp_path / 'pool'))
    assert names == ['manifest.json', 'sensitivity.csv',
                     'sensitivity_curve_tau_1.95us.csv', 'sensitivity_curve_tau_3.77us.csv']
    first = {name: (tmp_path / 'pool' / name).read_bytes() for name in names}
    assert run('sensitivity', tmp_path / 'pool', *flags) == EXIT_OK
    for name, content in first.items():
        assert (tmp_path / 'pool' / name).read_bytes() == content
    # a serial run writes the same tables
    assert run('sensitivity', tmp_path / 'serial', '--tau-us', '1.95', '3.77', '--seed', '7') == EXIT_OK
    for name in names:
        if name.endswith('.csv'):
            assert (tmp_path / 'serial' / name).read_bytes() == first[name]


def test_heating_command(tmp_path):
    assert run('heating', tmp_path) == EXIT_OK
    report = read_json(tmp_path / 'heating.json')
    assert report['gas_heating_rate_Kps'] == pytest.approx(22.2e-3, rel=0.02)
    assert report['hydrogen_heating_rate_Kps'] == pytest.approx(5.94e-3, rel=0.02)
    assert report['nitrogen_fraction_for_configured_rate'] == pytest.approx(0.62, abs=0.02)
    assert report['photon_recoil_heating_rate_Kps'] == 0.0
    assert report['lpn']['psd_m2pHz'] > 0


def test_config_file_with_units(tmp_path):
    config = tmp_path / 'config.yaml'
    config.write_text('physical:\n  omega1: 6.0\n  units:\n    omega1: kHz\n')
    assert run('qfi', tmp_path / 'out', '--config', str(config)) == EXIT_OK
    manifest = read_json(tmp_path / 'out' / 'manifest.json')
    assert manifest['config']['physical']['omega1'] == pytest.approx(2 * math.pi * 6e3)


def test_fit_profile_command(tmp_path, params):
    truth = QuenchProfile.for_tau(params, REFERENCE_TAUS[1], blend=False)
    t = np.linspace(-2e-6, 8 * REFERENCE_TAUS[1], 200)
    trace = tmp_path / 'trace.csv'
    pd.DataFrame({'t_s': t, 'intensity': truth.get_value(t)}).to_csv(trace, index=False)
    config = tmp_path / 'config.yaml'
    config.write_text('profile:\n  type: exponential\n  tau: 3.77\n  units:\n    tau: us\n')
    assert run('fit-profile', tmp_path / 'out', '--config', str(config), '--input', str(trace)) == EXIT_OK
    report = read_json(tmp_path / 'out' / 'profile_fit.json')
    assert report['model'] == 'exponential'
    assert report['parameters']['tau_exp'] == pytest.approx(REFERENCE_TAUS[1], rel=1e-3)
    assert report['n_samples'] == 200


def test_fit_histogram_command_with_input(tmp_path):
    rng = np.random.default_rng(4)
    shots = ShotSet(samples=np.abs(rng.normal(1e-9, 0.1e-9, 2000)), measure_time=1e-4, tilt=0.0, seed=4)
    path = str(tmp_path / 'shots.csv')
    shots.to_csv(path)
    assert run('fit-histogram', tmp_path / 'out', '--input', path) == EXIT_OK
    report = read_json(tmp_path / 'out' / 'histogram_fit.json')
    assert report['mu_m'] == pytest.approx(1e-9, rel=0.03)
    assert report['count'] == 2000
    assert report['measure_time_s'] == 1e-4


def test_allan_command_with_input(tmp_path):
    rng = np.random.default_rng(2)
    series = tmp_path / 'series.csv'
    pd.DataFrame({'a_mps2': rng.normal(0.0, 1e-3, 3000)}).to_csv(series, index=False)
    assert run('allan', tmp_path / 'out', '--input', str(series)) == EXIT_OK
    table = pd.read_csv(tmp_path / 'out' / 'allan.csv')
    assert list(table.columns) == ['t_A_s', 'allan_mps2', 'terms']
    # white noise at the 3 Hz default rate
    first = table.iloc[0]
    assert first['allan_mps2'] == pytest.approx(1e-3, rel=0.1)
    summary = read_json(tmp_path / 'out' / 'allan_summary.json')
    assert summary['samples'] == 3000
    assert summary['sample_rate_hz'] == 3.0


def test_json_format_flag(tmp_path):
    rng = np.random.default_rng(2)
    series = tmp_path / 'series.csv'
    pd.DataFrame({'a_mps2': rng.normal(0.0, 1e-3, 300)}).to_csv(series, index=False)
    assert run('allan', tmp_path / 'out', '--format', 'json', '--input', str(series)) == EXIT_OK
    assert os.path.exists(tmp_path / 'out' / 'allan.json')
    assert not os.path.exists(tmp_path / 'out' / 'allan.csv')


@pytest.mark.parametrize('argv', [
    ['launch'],
    ['qfi', '--bogus'],
    ['qfi', '--format', 'xml'],
    ['qfi', '--seed', 'abc'],
    [],
])
def test_usage_errors_exit_with_one(argv):
    assert main(argv) == EXIT_USAGE


def test_configuration_errors_exit_with_one(tmp_path):
    assert run('qfi', tmp_path, '--config', str(tmp_path / 'missing.yaml')) == EXIT_USAGE
    bad = tmp_path / 'bad.yaml'
    bad.write_text('physical:\n  mass: -1.0\n')
    assert run('qfi', tmp_path, '--config', str(bad)) == EXIT_USAGE
    assert run('fit-profile', tmp_path) == EXIT_USAGE
    assert run('allan', tmp_path, '--input', str(tmp_path / 'none.csv')) == EXIT_USAGE


def test_numerical_failure_exits_with_two(tmp_path, monkeypatch):
    def fail(self):
        raise NumericalError("non-finite QFI")

    monkeypatch.setattr(ExperimentController, 'qfi', fail)
    assert run('qfi', tmp_path) == EXIT_NUMERICAL


def test_help_exits_cleanly():
    assert main(['--help']) == EXIT_OK
