# utils/config.py

"""
Run configuration.

A configuration file (YAML or JSON, same schema) is layered over the
built-in reference defaults, and command-line overrides are layered over
the file. Every numeric field may declare its unit in a `units` mapping of
its section; values are converted to SI here and nowhere else. Problems are
collected across all sections and reported together as one ConfigError.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from quench_accel.defs import REFERENCE_TAUS
from quench_accel.dynamics.intensity_profiles import IntensityProfile, ProfileType
from quench_accel.exceptions import ConfigError, InvalidParamsError
from quench_accel.heating.models import GasSpec, LpnSpec
from quench_accel.model.params import PhysicalParams, reference_params
from quench_accel.stability.allan import DEFAULT_SAMPLE_RATE, DriftModel
from quench_accel.utils.object_factory import profile_factory
from quench_accel.utils.units import convert_section, to_si

SECTIONS = ('physical', 'profile', 'sweep', 'simulation', 'allan', 'heating', 'uncertainty', 'run')
OUTPUT_FORMATS = ('csv', 'json')

PROFILE_KINDS = {'tau': 'time', 't0': 'time', 'ts': 'time', 'Ts': 'time', 'q': 'dimensionless',
                 'intensity0': 'dimensionless'}
SWEEP_KINDS = {'tau': 'time', 'tilt': 'angle', 'heating': 'heating_rate'}
SIMULATION_KINDS = {'dt': 'time', 'dt_out': 'time', 't_end': 'time', 'delta_a': 'acceleration',
                    't_opt_threshold': 'time'}
ALLAN_KINDS = {'sample_rate': 'frequency', 'duration': 'time', 'shots_per_point': 'dimensionless'}
DRIFT_KINDS = {'linear_rate': 'drift_rate', 'sine_amplitude': 'acceleration', 'sine_period': 'time'}
LPN_KINDS = {'wavelength': 'length', 'mirror_distance': 'length', 'freq_noise_psd': 'psd_frequency'}
UNCERTAINTY_KINDS = {'mass': 'mass', 'nbar': 'dimensionless', 'omega0': 'angular_frequency',
                     'omega1': 'angular_frequency', 'calibration': 'dimensionless'}


@dataclass(frozen=True)
class SweepConfig:
    """Optional sweep lists in SI units (s, rad, K/s); None means no sweep over that axis."""
    tau: Optional[Tuple[float, ...]] = None
    tilt: Optional[Tuple[float, ...]] = None
    heating: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class SimulationConfig:
    dt: Optional[float] = None
    dt_out: float = 0.5e-6
    t_end: Optional[float] = None
    delta_a: float = 0.01
    t_opt_threshold: float = 30e-6


@dataclass(frozen=True)
class AllanConfig:
    sample_rate: float = DEFAULT_SAMPLE_RATE
    duration: float = 3 * 3600.0
    shots_per_point: int = 1
    drift: DriftModel = field(default_factory=DriftModel)


@dataclass(frozen=True)
class HeatingConfig:
    gas: GasSpec = field(default_factory=GasSpec.nitrogen)
    lpn: LpnSpec = field(default_factory=LpnSpec)


@dataclass(frozen=True)
class UncertaintyConfig:
    """
    1-σ input uncertainties in SI units; `calibration` is the relative
    uncertainty of the voltage-to-displacement factor.
    """
    mass: float = 0.2e-17
    nbar: float = 0.0
    omega0: float = 2.0 * math.pi * 1e3
    omega1: float = 2.0 * math.pi * 10.0
    calibration: float = 0.0


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    output_dir: str = 'results'
    format: str = 'csv'
    workers: Optional[int] = None


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved, validated run configuration (SI units).

    Attributes:
        params: Physical parameters.
        profile: Base intensity profile.
        profile_section: SI profile parameters used to rebuild the profile for other τ.
        sweep: Optional τ, tilt and heating lists.
        simulation: Integrator and sensitivity settings.
        allan: Long-run synthesis settings.
        heating: Gas and laser-phase-noise specifications.
        uncertainty: Input uncertainties for the QFI report.
        run: Seed, output directory, format and worker count.
    """
    params: PhysicalParams
    profile: IntensityProfile
    profile_section: Dict[str, Any]
    sweep: SweepConfig = field(default_factory=SweepConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    allan: AllanConfig = field(default_factory=AllanConfig)
    heating: HeatingConfig = field(default_factory=HeatingConfig)
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    run: RunSettings = field(default_factory=RunSettings)

    @property
    def profile_type(self) -> str:
        return self.profile_section.get('type', ProfileType.BLENDED.value)

    def profile_for(self, tau: Optional[float]) -> IntensityProfile:
        """
        The configured profile rebuilt for another quench constant τ.

        Step and data profiles have no τ and are returned unchanged; τ = 0
        gives a step profile.
        """
        if tau is None or self.profile_type in (ProfileType.STEP.value, ProfileType.DATA.value):
            return self.profile
        if tau == 0:
            return profile_factory(ProfileType.STEP, self._profile_parameters(), self.params)
        parameters = self._profile_parameters()
        parameters['tau'] = tau
        # blend centre and width follow τ unless pinned in the config
        for key in ('ts', 'Ts'):
            if key not in self.profile_section.get('pinned', ()):
                parameters.pop(key, None)
        return profile_factory(self.profile_type, parameters, self.params)

    def _profile_parameters(self) -> Dict[str, Any]:
        return {k: v for k, v in self.profile_section.items() if k not in ('type', 'pinned')}

    def taus(self) -> List[Optional[float]]:
        if self.sweep.tau:
            return list(self.sweep.tau)
        return [self.profile_section.get('tau')]

    def tilts(self) -> List[float]:
        return list(self.sweep.tilt) if self.sweep.tilt else [0.0]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-serialisable resolved configuration (SI units) for manifests."""
        return {
            'physical': self.params.to_config(),
            'profile': {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.profile_section.items()},
            'sweep': {k: (list(v) if v is not None else None) for k, v in asdict(self.sweep).items()},
            'simulation': asdict(self.simulation),
            'allan': asdict(self.allan),
            'heating': {'gas': {'components': [{'mass': m, 'fraction': x} for m, x in self.heating.gas.components]},
                        'lpn': asdict(self.heating.lpn)},
            'uncertainty': asdict(self.uncertainty),
            'run': asdict(self.run),
        }


def load_config(config_path: str) -> Dict[str, Any]:
    """
    Loads a YAML (.yaml/.yml) or JSON (.json) configuration file.

    Args:
        config_path (str): Path to the config file.

    Returns:
        dict: Raw configuration mapping.

    Raises:
        ConfigError: If the file is missing, unreadable or not a mapping.
    """
    if not os.path.exists(config_path):
        raise ConfigError([f"config: file not found {config_path}"])
    ext = os.path.splitext(config_path)[1].lower()
    try:
        with open(config_path, 'r') as file:
            if ext == '.json':
                raw = json.load(file)
            elif ext in ('.yaml', '.yml'):
                raw = yaml.safe_load(file)
            else:
                raise ConfigError([f"config: unsupported extension '{ext}' (expected .yaml, .yml or .json)"])
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError([f"config: could not parse {config_path}: {e}"]) from e
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be a mapping"])
    return raw


def _split_units(section: Mapping[str, Any], name: str, problems: List[str]) -> Tuple[Dict[str, Any], Dict[str, str]]:
    if not isinstance(section, Mapping):
        problems.append(f"{name}: expected a mapping")
        return {}, {}
    units = section.get('units') or {}
    if not isinstance(units, Mapping):
        problems.append(f"{name}.units: expected a mapping")
        units = {}
    return {k: v for k, v in section.items() if k != 'units'}, dict(units)


def _convert(values: Mapping[str, Any], kinds: Mapping[str, str], units: Mapping[str, str], name: str,
             problems: List[str]) -> Dict[str, float]:
    try:
        return convert_section(values, kinds, units)
    except ConfigError as e:
        problems.extend(f"{name}.{p}" for p in e.problems)
        return {}


def _physical(raw: Mapping[str, Any], problems: List[str]) -> PhysicalParams:
    try:
        return PhysicalParams.from_config(raw, reference_params())
    except ConfigError as e:
        problems.extend(f"physical.{p}" for p in e.problems)
    except (InvalidParamsError, TypeError) as e:
        problems.append(f"physical: {e}")
    return reference_params()


def _profile_section(raw: Mapping[str, Any], problems: List[str]) -> Dict[str, Any]:
    values, units = _split_units(raw, 'profile', problems)
    section: Dict[str, Any] = {'type': str(values.pop('type', ProfileType.BLENDED.value)).strip().lower()}
    if 'data_file' in values:
        section['data_file'] = str(values.pop('data_file'))
    section.update(_convert(values, PROFILE_KINDS, units, 'profile', problems))
    section['pinned'] = tuple(k for k in ('ts', 'Ts') if k in section)
    if section['type'] in (ProfileType.BLENDED.value, ProfileType.EXPONENTIAL.value):
        section.setdefault('tau', REFERENCE_TAUS[0])
    return section


def _sweep(raw: Mapping[str, Any], problems: List[str]) -> SweepConfig:
    values, units = _split_units(raw, 'sweep', problems)
    lists: Dict[str, Optional[Tuple[float, ...]]] = {}
    for key, items in values.items():
        if key not in SWEEP_KINDS:
            problems.append(f"sweep.{key}: unknown field")
            continue
        if items is None:
            continue
        if not isinstance(items, (list, tuple)) or len(items) == 0:
            problems.append(f"sweep.{key}: expected a non-empty list")
            continue
        try:
            lists[key] = tuple(to_si(v, SWEEP_KINDS[key], units.get(key), f"sweep.{key}") for v in items)
        except ConfigError as e:
            problems.extend(e.problems)
        except (TypeError, ValueError):
            problems.append(f"sweep.{key}: expected a list of numbers")
    return SweepConfig(**lists)


def _simulation(raw: Mapping[str, Any], problems: List[str]) -> SimulationConfig:
    values, units = _split_units(raw, 'simulation', problems)
    converted = _convert(values, SIMULATION_KINDS, units, 'simulation', problems)
    for key in ('dt', 'dt_out', 'delta_a', 't_opt_threshold', 't_end'):
        if key in converted and not converted[key] > 0:
            problems.append(f"simulation.{key}: must be positive")
            converted.pop(key)
    return SimulationConfig(**converted)


def _allan(raw: Mapping[str, Any], problems: List[str]) -> AllanConfig:
    values, units = _split_units(raw, 'allan', problems)
    drift_raw = values.pop('drift', None) or {}
    converted = _convert(values, ALLAN_KINDS, units, 'allan', problems)
    drift_values, drift_units = _split_units(drift_raw, 'allan.drift', problems)
    drift = DriftModel(**_convert(drift_values, DRIFT_KINDS, drift_units, 'allan.drift', problems))
    if 'shots_per_point' in converted:
        shots = converted['shots_per_point']
        if shots != int(shots) or shots < 1:
            problems.append("allan.shots_per_point: must be a positive integer")
            converted.pop('shots_per_point')
        else:
            converted['shots_per_point'] = int(shots)
    for key in ('sample_rate', 'duration'):
        if key in converted and not converted[key] > 0:
            problems.append(f"allan.{key}: must be positive")
            converted.pop(key)
    return AllanConfig(drift=drift, **converted)


def _heating(raw: Mapping[str, Any], problems: List[str]) -> HeatingConfig:
    values, _ = _split_units(raw, 'heating', problems)
    unknown = set(values) - {'gas', 'lpn'}
    problems.extend(f"heating.{k}: unknown field" for k in sorted(unknown))
    gas = GasSpec.nitrogen()
    if values.get('gas'):
        try:
            gas = GasSpec.from_config(values['gas'])
        except InvalidParamsError as e:
            problems.append(f"heating.gas: {e}")
    lpn = LpnSpec()
    if values.get('lpn'):
        lpn_values, lpn_units = _split_units(values['lpn'], 'heating.lpn', problems)
        try:
            lpn = LpnSpec(**_convert(lpn_values, LPN_KINDS, lpn_units, 'heating.lpn', problems))
        except InvalidParamsError as e:
            problems.append(f"heating.lpn: {e}")
    return HeatingConfig(gas=gas, lpn=lpn)


def _uncertainty(raw: Mapping[str, Any], problems: List[str]) -> UncertaintyConfig:
    values, units = _split_units(raw, 'uncertainty', problems)
    converted = _convert(values, UNCERTAINTY_KINDS, units, 'uncertainty', problems)
    for key, value in list(converted.items()):
        if value < 0:
            problems.append(f"uncertainty.{key}: must be non-negative")
            converted.pop(key)
    return UncertaintyConfig(**converted)


def _run(raw: Mapping[str, Any], problems: List[str]) -> RunSettings:
    values, _ = _split_units(raw, 'run', problems)
    settings: Dict[str, Any] = {}
    for key, value in values.items():
        if key == 'seed':
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"run.seed: expected an integer, got {value!r}")
            else:
                settings['seed'] = value
        elif key == 'output_dir':
            settings['output_dir'] = str(value)
        elif key == 'format':
            if value not in OUTPUT_FORMATS:
                problems.append(f"run.format: expected one of {list(OUTPUT_FORMATS)}, got {value!r}")
            else:
                settings['format'] = value
        elif key == 'workers':
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 1):
                problems.append(f"run.workers: expected a positive integer, got {value!r}")
            else:
                settings['workers'] = value
        else:
            problems.append(f"run.{key}: unknown field")
    return RunSettings(**settings)


def merge_overrides(raw: Dict[str, Any], overrides: Optional[Mapping[str, Mapping[str, Any]]]) -> Dict[str, Any]:
    """
    Layers override sections over a raw configuration; overriding a field
    also drops any unit declared for it in the file.
    """
    merged = {name: dict(section) if isinstance(section, Mapping) else section for name, section in raw.items()}
    for name, section in (overrides or {}).items():
        target = merged.setdefault(name, {})
        units = dict(target.get('units') or {})
        for key, value in section.items():
            target[key] = value
            units.pop(key, None)
        if units:
            target['units'] = units
        else:
            target.pop('units', None)
    return merged


def build_run_config(raw: Optional[Mapping[str, Any]] = None,
                     overrides: Optional[Mapping[str, Mapping[str, Any]]] = None) -> RunConfig:
    """
    Resolves a raw configuration mapping into a RunConfig.

    Args:
        raw: Parsed configuration file contents, or None for pure defaults.
        overrides: Section-wise SI overrides (e.g. from command-line flags),
            applied over `raw`.

    Raises:
        ConfigError: Listing every unknown section, unknown field and invalid value.
    """
    merged = merge_overrides(dict(raw or {}), overrides)
    problems: List[str] = []
    for name in merged:
        if name not in SECTIONS:
            problems.append(f"{name}: unknown section")

    params = _physical(merged.get('physical') or {}, problems)
    profile_section = _profile_section(merged.get('profile') or {}, problems)
    config_parts = dict(
        sweep=_sweep(merged.get('sweep') or {}, problems),
        simulation=_simulation(merged.get('simulation') or {}, problems),
        allan=_allan(merged.get('allan') or {}, problems),
        heating=_heating(merged.get('heating') or {}, problems),
        uncertainty=_uncertainty(merged.get('uncertainty') or {}, problems),
        run=_run(merged.get('run') or {}, problems),
    )
    profile = None
    if not problems:
        try:
            parameters = {k: v for k, v in profile_section.items() if k not in ('type', 'pinned')}
            profile = profile_factory(profile_section['type'], parameters, params)
        except ConfigError as e:
            problems.extend(e.problems)
    if problems:
        raise ConfigError(problems)
    return RunConfig(params=params, profile=profile, profile_section=profile_section, **config_parts)


def load_run_config(config_path: Optional[str] = None,
                    overrides: Optional[Mapping[str, Mapping[str, Any]]] = None) -> RunConfig:
    """Reads `config_path` (if given) and resolves it with `overrides` over the reference defaults."""
    raw = load_config(config_path) if config_path else {}
    return build_run_config(raw, overrides)
