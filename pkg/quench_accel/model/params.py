# model/params.py

"""
Physical configuration of the levitated-nanoparticle accelerometer.

PhysicalParams bundles every quantity the simulation needs (particle,
trap frequencies before and after the quench, initial occupation, gas
environment, tilt offset and trap-shift amplitude). DerivedScalars holds the
dimensionless and zero-point quantities computed from it. All values are
SI; conversion from laboratory units happens in `from_config`.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Mapping, Optional

from quench_accel.defs import BOLTZMANN, HBAR, STANDARD_GRAVITY
from quench_accel.exceptions import InvalidParamsError
from quench_accel.utils.units import convert_section

PARAM_KINDS: Dict[str, str] = {
    'mass': 'mass',
    'radius': 'length',
    'density': 'density',
    'omega0': 'angular_frequency',
    'omega1': 'angular_frequency',
    'nbar': 'dimensionless',
    'gas_temperature': 'temperature',
    'pressure': 'pressure',
    'gravity': 'acceleration',
    'theta0': 'angle',
    'chi': 'length',
    'heating_rate': 'heating_rate',
    'hbar': 'action',
    'boltzmann': 'entropy',
}


@dataclass(frozen=True)
class PhysicalParams:
    """
    Complete physical configuration, SI units throughout.

    Attributes:
        mass: Nanoparticle mass m (kg).
        radius: Mean radius R (m).
        density: Material density ρ (kg/m³).
        omega0: Pre-quench trap angular frequency ω₀ (rad/s).
        omega1: Post-quench trap angular frequency ω₁ (rad/s).
        nbar: Initial mean phonon number n̄.
        gas_temperature: Background gas temperature T₀ (K).
        pressure: Background gas pressure P (Pa).
        gravity: Gravitational acceleration g (m/s²).
        theta0: Intrinsic lattice tilt θ₀ (rad).
        chi: Trap-shift amplitude χ (m).
        heating_rate: Temperature heating rate Γ_heat (K/s).
        hbar: Reduced Planck constant (J·s).
        boltzmann: Boltzmann constant (J/K).
    """
    mass: float
    radius: float
    density: float
    omega0: float
    omega1: float
    nbar: float
    gas_temperature: float
    pressure: float
    gravity: float = STANDARD_GRAVITY
    theta0: float = 0.0
    chi: float = 0.0
    heating_rate: float = 0.0
    hbar: float = field(default=HBAR, repr=False)
    boltzmann: float = field(default=BOLTZMANN, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Checks every invariant of the configuration.

        Raises:
            InvalidParamsError: Naming the first violated invariant.
        """
        for name in PARAM_KINDS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParamsError(f"{name} must be finite, got {value}")
        if self.mass <= 0:
            raise InvalidParamsError(f"mass > 0 violated: mass={self.mass}")
        if self.radius <= 0:
            raise InvalidParamsError(f"radius > 0 violated: radius={self.radius}")
        if self.density <= 0:
            raise InvalidParamsError(f"density > 0 violated: density={self.density}")
        if self.pressure < 0:
            raise InvalidParamsError(f"pressure >= 0 violated: pressure={self.pressure}")
        if not self.omega0 > self.omega1 > 0:
            raise InvalidParamsError(
                f"omega0 > omega1 > 0 violated: omega0={self.omega0}, omega1={self.omega1}"
            )
        if self.nbar < 0:
            raise InvalidParamsError(f"nbar >= 0 violated: nbar={self.nbar}")
        if self.gas_temperature <= 0:
            raise InvalidParamsError(f"gas_temperature > 0 violated: gas_temperature={self.gas_temperature}")
        if self.heating_rate < 0:
            raise InvalidParamsError(f"heating_rate >= 0 violated: heating_rate={self.heating_rate}")
        if self.hbar <= 0 or self.boltzmann <= 0:
            raise InvalidParamsError("physical constants must be positive")

    def with_overrides(self, **overrides: Any) -> 'PhysicalParams':
        """Returns a copy with the given fields replaced (validated)."""
        return replace(self, **overrides)

    @classmethod
    def from_config(cls, section: Mapping[str, Any], base: Optional['PhysicalParams'] = None) -> 'PhysicalParams':
        """
        Builds parameters from a config section with an optional `units` sub-object.

        Fields missing from the section are taken from `base` (reference defaults
        when no base is given).

        Args:
            section: Mapping of field names to values plus optional `units`.
            base: Parameters supplying the fields that are not set.

        Returns:
            PhysicalParams: Validated parameters in SI units.
        """
        values = {k: v for k, v in section.items() if k != 'units'}
        converted = convert_section(values, PARAM_KINDS, section.get('units'))
        base = base if base is not None else reference_params()
        return base.with_overrides(**converted)

    def to_config(self) -> Dict[str, Any]:
        """Serialises to a config section with explicit SI units."""
        section: Dict[str, Any] = asdict(self)
        section['units'] = {
            'mass': 'kg', 'radius': 'm', 'density': 'kg/m^3', 'omega0': 'rad/s',
            'omega1': 'rad/s', 'gas_temperature': 'K', 'pressure': 'Pa', 'gravity': 'm/s^2',
            'theta0': 'rad', 'chi': 'm', 'heating_rate': 'K/s', 'hbar': 'J*s', 'boltzmann': 'J/K',
        }
        return section


@dataclass(frozen=True)
class DerivedScalars:
    """
    Scalars derived from PhysicalParams.

    Attributes:
        kappa: κ = 2n̄ + 1.
        freq_ratio_sq: r = ω₀²/ω₁².
        zero_point_z: z₀ = √(ħ/(2mω₀)) (m).
        zero_point_p: p₀ = √(ħmω₀/2) (kg·m/s).
        gamma_damping: γ = Γ_heat/T₀ (1/s).
    """
    kappa: float
    freq_ratio_sq: float
    zero_point_z: float
    zero_point_p: float
    gamma_damping: float


def derive(params: PhysicalParams) -> DerivedScalars:
    """
    Computes the derived scalars shared by every module.

    γ is chosen so that the fluctuation term 2mk_BT₀γ of the moment
    equations heats the free particle at exactly dT/dt = Γ_heat.

    Raises:
        InvalidParamsError: If `params` violates an invariant.
    """
    params.validate()
    return DerivedScalars(
        kappa=2.0 * params.nbar + 1.0,
        freq_ratio_sq=params.omega0 ** 2 / params.omega1 ** 2,
        zero_point_z=math.sqrt(params.hbar / (2.0 * params.mass * params.omega0)),
        zero_point_p=math.sqrt(params.hbar * params.mass * params.omega0 / 2.0),
        gamma_damping=params.heating_rate / params.gas_temperature,
    )


def static_displacement(a: float, omega: float) -> float:
    """
    Displacement a·ω⁻² of the potential minimum of a harmonic trap under a
    static acceleration.

    Raises:
        InvalidParamsError: If omega is not positive.
    """
    if not omega > 0:
        raise InvalidParamsError(f"omega > 0 violated: omega={omega}")
    return a / omega ** 2


def quench_displacement(params: PhysicalParams, a: float) -> float:
    """Shift a(ω₁⁻² − ω₀⁻²) of the trap minimum caused by the quench."""
    return static_displacement(a, params.omega1) - static_displacement(a, params.omega0)


def acceleration_from_tilt(params: PhysicalParams, tilt: float) -> float:
    """Projection g·sin(θ + θ₀) of gravity on the lattice axis for a table tilt θ (rad)."""
    return params.gravity * math.sin(tilt + params.theta0)


def reference_params() -> PhysicalParams:
    """
    Configuration of the reference experiment.

    Silica sphere of radius 145 nm, trap quenched from 250 kHz to 5.97 kHz,
    n̄ = 1.25, residual gas at 354 K and 3×10⁻⁶ Pa, lattice tilt −3.24°,
    trap shift 37 pm, heating 16 mK/s.
    """
    return PhysicalParams(
        mass=2.9e-17,
        radius=145e-9,
        density=2260.0,
        omega0=2.0 * math.pi * 250e3,
        omega1=2.0 * math.pi * 5.97e3,
        nbar=1.25,
        gas_temperature=354.0,
        pressure=3.0e-6,
        gravity=STANDARD_GRAVITY,
        theta0=math.radians(-3.24),
        chi=37e-12,
        heating_rate=16e-3,
    )
