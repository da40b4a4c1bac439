import hashlib
import json
import math
import os
import pathlib

import pandas as pd
import pytest

from quench_accel.defs import REFERENCE_TAUS
from quench_accel.dynamics.intensity_profiles import ProfileType, QuenchProfile, StepProfile
from quench_accel.exceptions import ConfigError
from quench_accel.utils.config import build_run_config, load_config, load_run_config, merge_overrides
from quench_accel.utils.io import write_manifest, write_table
from quench_accel.utils.object_factory import profile_factory

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')


def test_defaults_without_a_file(params):
    config = build_run_config()
    assert config.params == params
    assert isinstance(config.profile, QuenchProfile)
    assert config.profile.tau_exp == REFERENCE_TAUS[0]
    assert config.run.seed == 0
    assert config.run.format == 'csv'
    assert config.taus() == [REFERENCE_TAUS[0]]
    assert config.tilts() == [0.0]


def test_reference_config_file_converts_to_si(params):
    config = load_run_config(os.path.join(CONFIG_DIR, 'reference.yaml'))
    assert config.params.omega0 == pytest.approx(2 * math.pi * 250e3, rel=1e-12)
    assert config.params.omega1 == pytest.approx(2 * math.pi * 5.97e3, rel=1e-12)
    assert config.params.radius == pytest.approx(145e-9, rel=1e-12)
    assert config.params.theta0 == pytest.approx(math.radians(-3.24), rel=1e-12)
    assert config.params.heating_rate == pytest.approx(16e-3, rel=1e-12)
    assert config.profile.tau_exp == pytest.approx(1.95e-6, rel=1e-12)
    assert config.simulation.t_opt_threshold == pytest.approx(30e-6, rel=1e-12)
    assert config.heating.lpn.wavelength == pytest.approx(1551e-9, rel=1e-12)
    assert config.uncertainty.omega1 == pytest.approx(2 * math.pi * 10.0, rel=1e-12)


def test_tau_sweep_config_loads():
    config = load_run_config(os.path.join(CONFIG_DIR, 'tau_sweep.yaml'))
    assert len(config.taus()) > 1
    assert all(tau > 0 for tau in config.taus())


def test_file_overrides_defaults_and_flags_override_file():
    raw = {'physical': {'nbar': 2.0, 'pressure': 1e-6}}
    assert build_run_config(raw).params.nbar == 2.0
    config = build_run_config(raw, {'physical': {'nbar': 3.0}})
    assert config.params.nbar == 3.0
    assert config.params.pressure == 1e-6


def test_override_drops_the_unit_declared_in_the_file():
    raw = {'physical': {'omega1': 5.0, 'units': {'omega1': 'kHz', 'chi': 'pm'}, 'chi': 30}}
    merged = merge_overrides(raw, {'physical': {'omega1': 2 * math.pi * 6e3}})
    assert merged['physical']['units'] == {'chi': 'pm'}
    config = build_run_config(raw, {'physical': {'omega1': 2 * math.pi * 6e3}})
    assert config.params.omega1 == pytest.approx(2 * math.pi * 6e3, rel=1e-12)
    assert config.params.chi == pytest.approx(30e-12, rel=1e-12)
    # the raw mapping is left untouched
    assert raw['physical']['units'] == {'omega1': 'kHz', 'chi': 'pm'}


def test_all_problems_are_reported_together():
    raw = {
        'bogus': {},
        'physical': {'colour': 1},
        'run': {'seed': 'x', 'format': 'xml', 'workers': 0},
        'simulation': {'dt_out': -1.0},
        'sweep': {'tau': []},
    }
    with pytest.raises(ConfigError) as excinfo:
        build_run_config(raw)
    problems = excinfo.value.problems
    assert 'bogus: unknown section' in problems
    assert any('colour' in p for p in problems)
    assert any(p.startswith('run.seed') for p in problems)
    assert any(p.startswith('run.format') for p in problems)
    assert any(p.startswith('run.workers') for p in problems)
    assert 'simulation.dt_out: must be positive' in problems
    assert 'sweep.tau: expected a non-empty list' in problems


def test_unknown_unit_is_a_config_error():
    with pytest.raises(ConfigError) as excinfo:
        build_run_config({'profile': {'tau': 2, 'units': {'tau': 'fortnight'}}})
    assert any('fortnight' in p for p in excinfo.value.problems)


def test_sweep_lists_are_converted():
    config = build_run_config({'sweep': {'tau': [2, 4], 'tilt': [-1, 1], 'units': {'tau': 'us', 'tilt': 'deg'}}})
    assert config.taus() == pytest.approx([2e-6, 4e-6])
    assert config.tilts() == pytest.approx([-math.pi / 180, math.pi / 180])


def test_profile_for_rebuilds_for_other_taus():
    config = build_run_config()
    profile = config.profile_for(REFERENCE_TAUS[2])
    assert isinstance(profile, QuenchProfile)
    assert profile.tau_exp == REFERENCE_TAUS[2]
    assert profile.ts == pytest.approx(REFERENCE_TAUS[2] / 2)
    assert profile.Ts == pytest.approx(REFERENCE_TAUS[2])
    assert isinstance(config.profile_for(0.0), StepProfile)
    assert config.profile_for(None) is config.profile


def test_profile_for_keeps_pinned_blend_window():
    config = build_run_config({'profile': {'tau': 2e-6, 'ts': 1.5e-6}})
    profile = config.profile_for(4e-6)
    assert profile.ts == 1.5e-6
    assert profile.Ts == pytest.approx(4e-6)


def test_step_profile_ignores_tau():
    config = build_run_config({'profile': {'type': 'step'}})
    assert isinstance(config.profile, StepProfile)
    assert config.profile_for(5e-6) is config.profile


def test_to_dict_is_json_serialisable():
    config = build_run_config({'sweep': {'tau': [2e-6, 4e-6]}})
    data = json.loads(json.dumps(config.to_dict()))
    assert data['sweep']['tau'] == [2e-6, 4e-6]
    assert data['physical']['units']['omega0'] == 'rad/s'
    assert 'pinned' in data['profile']


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.yaml'))
    bad_ext = tmp_path / 'config.txt'
    bad_ext.write_text('physical: {}\n')
    with pytest.raises(ConfigError):
        load_config(str(bad_ext))
    not_mapping = tmp_path / 'list.yaml'
    not_mapping.write_text('- 1\n- 2\n')
    with pytest.raises(ConfigError):
        load_config(str(not_mapping))
    broken = tmp_path / 'broken.json'
    broken.write_text('{"physical": ')
    with pytest.raises(ConfigError):
        load_config(str(broken))


def test_yaml_and_json_share_one_schema(tmp_path):
    section = {'physical': {'omega1': 6.0, 'units': {'omega1': 'kHz'}}, 'run': {'seed': 7}}
    json_path = tmp_path / 'config.json'
    json_path.write_text(json.dumps(section))
    yaml_path = tmp_path / 'config.yaml'
    yaml_path.write_text('physical:\n  omega1: 6.0\n  units:\n    omega1: kHz\nrun:\n  seed: 7\n')
    from_json, from_yaml = load_run_config(str(json_path)), load_run_config(str(yaml_path))
    assert from_json.params == from_yaml.params
    assert from_json.run.seed == from_yaml.run.seed == 7


def test_empty_yaml_gives_defaults(tmp_path, params):
    path = tmp_path / 'empty.yaml'
    path.write_text('')
    assert load_run_config(str(path)).params == params


# profile factory

def test_profile_factory_builds_each_type(params):
    tau = REFERENCE_TAUS[1]
    blended = profile_factory('blended', {'tau': tau}, params)
    exponential = profile_factory(ProfileType.EXPONENTIAL, {'tau': tau}, params)
    step = profile_factory(' Step ', {}, params)
    assert blended.blend and not exponential.blend
    assert blended.q == pytest.approx((params.omega1 / params.omega0) ** 2)
    assert isinstance(step, StepProfile)


def test_profile_factory_errors(params):
    with pytest.raises(ConfigError):
        profile_factory('wobble', {}, params)
    with pytest.raises(ConfigError):
        profile_factory('blended', {}, params)
    with pytest.raises(ConfigError):
        profile_factory('data', {}, params)
    with pytest.raises(ConfigError):
        profile_factory('blended', {'tau': -1e-6}, params)


def test_data_profile_from_file(tmp_path, params):
    path = tmp_path / 'trace.csv'
    pd.DataFrame({'t_s': [0.0, 1e-6, 2e-6], 'intensity': [1.0, 0.5, 0.1]}).to_csv(path, index=False)
    profile = profile_factory('data', {'data_file': str(path)}, params)
    assert profile.get_value(1e-6) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        profile_factory('data', {'data_file': str(tmp_path / 'none.csv')}, params)


# output files

def test_write_table_formats(tmp_path):
    frame = pd.DataFrame({'t_s': [0.0, 1e-6], 'S_s2pm': [1.0, 2.5]})
    csv_path = write_table(frame, str(tmp_path / 'table'), 'csv')
    json_path = write_table(frame, str(tmp_path / 'table'), 'json')
    assert csv_path.endswith('table.csv') and json_path.endswith('table.json')
    assert pd.read_csv(csv_path)['S_s2pm'].tolist() == [1.0, 2.5]
    with open(json_path) as f:
        assert json.load(f) == [{'S_s2pm': 1.0, 't_s': 0.0}, {'S_s2pm': 2.5, 't_s': 1e-6}]
    with pytest.raises(ValueError):
        write_table(frame, str(tmp_path / 'table'), 'xlsx')


def test_manifest_lists_hashes_without_timestamps(tmp_path):
    frame = pd.DataFrame({'x': [1.0, 2.0]})
    paths = [write_table(frame, str(tmp_path / 'b')), write_table(frame, str(tmp_path / 'a'))]
    manifest_path = write_manifest(str(tmp_path), 'qfi', {'run': {'seed': 3}}, 3, paths)
    with open(manifest_path) as f:
        manifest = json.load(f)
    assert set(manifest) == {'command', 'config', 'seed', 'files'}
    assert [entry['path'] for entry in manifest['files']] == ['a.csv', 'b.csv']
    with open(tmp_path / 'a.csv', 'rb') as f:
        assert manifest['files'][0]['sha256'] == hashlib.sha256(f.read()).hexdigest()
    first = pathlib.Path(manifest_path).read_bytes()
    write_manifest(str(tmp_path), 'qfi', {'run': {'seed': 3}}, 3, paths)
    assert pathlib.Path(manifest_path).read_bytes() == first
