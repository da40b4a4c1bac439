# heating/models.py

"""
Closed-form heating rates.

Background gas: the translational heating rate of a sphere in a dilute gas
is Γ = B·T₀·P/(Rρ) with B = (4 + π/2)·√(m_gas/(2πk_BT₀)); a mixture adds the
component rates weighted by partial-pressure fraction.

Laser phase noise (LPN): frequency noise of the lattice laser moves the
trap centre by P̃_n² = (λd/c)²·S_ν(f₁) per Hz, and on resonance heats at
Γ_E = ½mω₁⁴P̃_n².

Photon recoil is about two orders of magnitude below the gas term and is
represented by a zero rate.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple

from quench_accel.defs import H2_MASS, LIGHT_SPEED, N2_MASS
from quench_accel.exceptions import InvalidParamsError
from quench_accel.model.params import PhysicalParams

FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class GasSpec:
    """
    Background gas composition.

    Attributes:
        components: (molecular mass in kg, partial-pressure fraction) pairs;
            fractions are non-negative and sum to 1.
    """
    components: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        components = tuple((float(m), float(x)) for m, x in self.components)
        if not components:
            raise InvalidParamsError("GasSpec needs at least one component")
        if any(m <= 0 for m, _ in components):
            raise InvalidParamsError("GasSpec molecular masses must be positive")
        if any(x < 0 for _, x in components):
            raise InvalidParamsError("GasSpec fractions must be non-negative")
        total = sum(x for _, x in components)
        if abs(total - 1.0) > FRACTION_TOL:
            raise InvalidParamsError(f"GasSpec fractions must sum to 1, got {total}")
        object.__setattr__(self, 'components', components)

    @classmethod
    def nitrogen(cls) -> 'GasSpec':
        return cls(((N2_MASS, 1.0),))

    @classmethod
    def hydrogen(cls) -> 'GasSpec':
        return cls(((H2_MASS, 1.0),))

    @classmethod
    def nitrogen_hydrogen(cls, nitrogen_fraction: float) -> 'GasSpec':
        return cls(((N2_MASS, nitrogen_fraction), (H2_MASS, 1.0 - nitrogen_fraction)))

    @classmethod
    def from_config(cls, section: Dict[str, Any]) -> 'GasSpec':
        """
        Builds a spec from `{'components': [{'mass': kg, 'fraction': x}, ...]}`
        or the shorthand `{'nitrogen_fraction': x}`.
        """
        if 'nitrogen_fraction' in section:
            return cls.nitrogen_hydrogen(float(section['nitrogen_fraction']))
        try:
            return cls(tuple((c['mass'], c['fraction']) for c in section['components']))
        except (KeyError, TypeError) as e:
            raise InvalidParamsError(f"gas: expected 'components' with mass and fraction entries ({e})") from e


@dataclass(frozen=True)
class LpnSpec:
    """
    Laser phase-noise inputs.

    Attributes:
        wavelength: λ (m).
        mirror_distance: Particle-to-mirror distance d (m).
        freq_noise_psd: S_ν at f₁ = ω₁/2π (Hz²/Hz); zero disables the term.
        light_speed: c (m/s).
    """
    wavelength: float = 1551e-9
    mirror_distance: float = 16.6e-3
    freq_noise_psd: float = 1.0
    light_speed: float = LIGHT_SPEED

    def __post_init__(self):
        if self.wavelength <= 0 or self.mirror_distance <= 0 or self.light_speed <= 0:
            raise InvalidParamsError("LpnSpec wavelength, mirror_distance and light_speed must be positive")
        if self.freq_noise_psd < 0:
            raise InvalidParamsError(f"freq_noise_psd >= 0 violated: {self.freq_noise_psd}")


@dataclass(frozen=True)
class LpnHeating:
    """
    Attributes:
        psd: Trap-centre displacement PSD P̃_n² (m²/Hz).
        energy_rate: Γ_E (J/s).
        phonon_rate: Γ_E/(ħω₁) (1/s).
        temp_rate: Γ_E/k_B (K/s).
    """
    psd: float
    energy_rate: float
    phonon_rate: float
    temp_rate: float

    def to_report(self) -> Dict[str, float]:
        return {'psd_m2pHz': self.psd, 'energy_rate_Jps': self.energy_rate,
                'phonon_rate_ps': self.phonon_rate, 'temp_rate_Kps': self.temp_rate}


def single_gas_heating_rate(params: PhysicalParams, molecular_mass: float) -> float:
    """Γ = B·T₀·P/(Rρ) for one gas species (K/s)."""
    t0 = params.gas_temperature
    b = (4.0 + math.pi / 2.0) * math.sqrt(molecular_mass / (2.0 * math.pi * params.boltzmann * t0))
    return b * t0 * params.pressure / (params.radius * params.density)


def gas_heating_rate(params: PhysicalParams, gas: GasSpec) -> float:
    """Background-gas heating rate of a mixture, Σ fraction_i·Γ(m_i) (K/s)."""
    return sum(fraction * single_gas_heating_rate(params, mass) for mass, fraction in gas.components)


def nitrogen_fraction_for_rate(params: PhysicalParams, target_rate: float) -> float:
    """
    Nitrogen fraction x of an N₂/H₂ mixture whose heating rate equals target_rate.

    Solves Γ_H2 + x(Γ_N2 − Γ_H2) = target exactly.

    Raises:
        InvalidParamsError: If the target is outside [Γ_H2, Γ_N2].
    """
    rate_n2 = single_gas_heating_rate(params, N2_MASS)
    rate_h2 = single_gas_heating_rate(params, H2_MASS)
    x = (target_rate - rate_h2) / (rate_n2 - rate_h2)
    if not 0.0 <= x <= 1.0:
        raise InvalidParamsError(
            f"Target {target_rate:.4e} K/s outside the N2/H2 range [{rate_h2:.4e}, {rate_n2:.4e}] K/s"
        )
    return x


def lpn_heating(params: PhysicalParams, lpn: LpnSpec) -> LpnHeating:
    """On-resonance laser-phase-noise heating at ω₁."""
    psd = (lpn.wavelength * lpn.mirror_distance / lpn.light_speed) ** 2 * lpn.freq_noise_psd
    energy_rate = 0.5 * params.mass * params.omega1 ** 4 * psd
    return LpnHeating(
        psd=psd,
        energy_rate=energy_rate,
        phonon_rate=energy_rate / (params.hbar * params.omega1),
        temp_rate=energy_rate / params.boltzmann,
    )


def photon_recoil_heating_rate(params: PhysicalParams) -> float:
    """Photon-recoil heating, neglected: two orders of magnitude below the gas term."""
    return 0.0
