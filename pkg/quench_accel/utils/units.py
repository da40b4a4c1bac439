"""
Unit conversion at the configuration boundary.

Everything inside the package is strict SI. Configuration files and CLI
flags may use laboratory units; each numeric field has a "kind" and the
declared unit is looked up in that kind's table. Angular-frequency fields
given in Hz or kHz are cyclic frequencies, so the factor includes 2π.
"""

import math
from typing import Dict, Mapping, Optional

from quench_accel.exceptions import ConfigError

UNIT_TABLES: Dict[str, Dict[str, float]] = {
    'length': {'m': 1.0, 'mm': 1e-3, 'um': 1e-6, 'μm': 1e-6, 'nm': 1e-9, 'pm': 1e-12},
    'mass': {'kg': 1.0, 'g': 1e-3, 'amu': 1.66053906660e-27},
    'density': {'kg/m^3': 1.0, 'g/cm^3': 1e3},
    'angular_frequency': {
        'rad/s': 1.0,
        'Hz': 2.0 * math.pi,
        'kHz': 2.0 * math.pi * 1e3,
        'MHz': 2.0 * math.pi * 1e6,
    },
    'frequency': {'Hz': 1.0, 'kHz': 1e3},
    'angle': {'rad': 1.0, 'mrad': 1e-3, 'deg': math.pi / 180.0},
    'heating_rate': {'K/s': 1.0, 'mK/s': 1e-3},
    'temperature': {'K': 1.0, 'mK': 1e-3},
    'pressure': {'Pa': 1.0, 'mbar': 100.0},
    'time': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'μs': 1e-6, 'ns': 1e-9},
    'acceleration': {'m/s^2': 1.0, 'mm/s^2': 1e-3},
    'drift_rate': {'m/s^3': 1.0},
    'psd_frequency': {'Hz^2/Hz': 1.0, 'kHz^2/Hz': 1e6},
    'speed': {'m/s': 1.0},
    'action': {'J*s': 1.0},
    'entropy': {'J/K': 1.0},
    'dimensionless': {'': 1.0, '1': 1.0},
}


def to_si(value: float, kind: str, unit: Optional[str], field: str = '') -> float:
    """
    Converts a value given in `unit` to SI.

    Args:
        value: Numeric value as written in the configuration.
        kind: Physical kind of the field (key of UNIT_TABLES).
        unit: Declared unit, or None for SI.
        field: Field name used in error messages.

    Returns:
        float: The value in SI units.

    Raises:
        ConfigError: If the unit is unknown for this kind.
    """
    if unit is None:
        return float(value)
    table = UNIT_TABLES[kind]
    if unit not in table:
        raise ConfigError([f"{field}: unknown unit '{unit}' for {kind} (expected one of {sorted(table)})"])
    return float(value) * table[unit]


def convert_section(values: Mapping[str, float], kinds: Mapping[str, str],
                    units: Optional[Mapping[str, str]] = None) -> Dict[str, float]:
    """
    Converts every numeric field of a config section to SI.

    Fields without a declared unit are taken as SI. Unknown fields and bad
    units are collected and reported together.
    """
    units = dict(units or {})
    problems = []
    converted: Dict[str, float] = {}
    for field, value in values.items():
        if field not in kinds:
            problems.append(f"{field}: unknown field")
            continue
        try:
            converted[field] = to_si(value, kinds[field], units.pop(field, None), field)
        except ConfigError as e:
            problems.extend(e.problems)
        except (TypeError, ValueError):
            problems.append(f"{field}: expected a number, got {value!r}")
    for field in units:
        problems.append(f"units.{field}: unit declared for a field that is not set")
    if problems:
        raise ConfigError(problems)
    return converted
