# utils/object_factory.py

from typing import Any, Callable, Dict, Union

from quench_accel.dynamics.intensity_profiles import (
    DataDrivenProfile,
    IntensityProfile,
    ProfileType,
    QuenchProfile,
    StepProfile,
)
from quench_accel.exceptions import ConfigError, InvalidParamsError
from quench_accel.model.params import PhysicalParams


def _ramp(params: PhysicalParams, parameters: Dict[str, Any], blend: bool) -> QuenchProfile:
    if 'tau' not in parameters:
        raise ConfigError(["profile.tau: required for blended and exponential profiles"])
    tau = float(parameters['tau'])
    t0 = float(parameters.get('t0', 0.0))
    return QuenchProfile(
        intensity0=float(parameters.get('intensity0', 1.0)),
        q=float(parameters.get('q', (params.omega1 / params.omega0) ** 2)),
        tau_exp=tau,
        t0=t0,
        ts=float(parameters.get('ts', t0 + 0.5 * tau)),
        Ts=float(parameters.get('Ts', tau)),
        blend=blend,
    )


def _step(params: PhysicalParams, parameters: Dict[str, Any]) -> StepProfile:
    return StepProfile(
        intensity0=float(parameters.get('intensity0', 1.0)),
        q=float(parameters.get('q', (params.omega1 / params.omega0) ** 2)),
        t0=float(parameters.get('t0', 0.0)),
    )


def _data(params: PhysicalParams, parameters: Dict[str, Any]) -> DataDrivenProfile:
    if 'data_file' not in parameters:
        raise ConfigError(["profile.data_file: required for data profiles"])
    try:
        return DataDrivenProfile.from_csv(parameters['data_file'])
    except FileNotFoundError as e:
        raise ConfigError([f"profile.data_file: file not found {parameters['data_file']}"]) from e
    except KeyError as e:
        raise ConfigError([f"profile.data_file: missing column {e}"]) from e


def profile_factory(profile_type: Union[str, ProfileType], profile_parameters: Dict[str, Any],
                    params: PhysicalParams) -> IntensityProfile:
    """
    Factory function to create intensity profiles based on the profile_type.

    Args:
        profile_type (str): One of 'blended', 'exponential', 'step', 'data'.
        profile_parameters (Dict[str, Any]): SI parameters of the profile; q
            defaults to ω₁²/ω₀² of `params`.
        params (PhysicalParams): Physical parameters supplying the default q.

    Returns:
        IntensityProfile: An instance of the specified profile.

    Raises:
        ConfigError: If the profile_type is unknown or the parameters are invalid.
    """
    if isinstance(profile_type, ProfileType):
        profile_type = profile_type.value
    profile_type = str(profile_type).strip().lower()
    profile_type_mapping: Dict[str, Callable[[PhysicalParams, Dict[str, Any]], IntensityProfile]] = {
        ProfileType.BLENDED.value: lambda p, kw: _ramp(p, kw, blend=True),
        ProfileType.EXPONENTIAL.value: lambda p, kw: _ramp(p, kw, blend=False),
        ProfileType.STEP.value: _step,
        ProfileType.DATA.value: _data,
    }

    if profile_type not in profile_type_mapping:
        raise ConfigError([f"profile.type: unknown profile type '{profile_type}' "
                           f"(expected one of {sorted(profile_type_mapping)})"])
    try:
        return profile_type_mapping[profile_type](params, profile_parameters)
    except (InvalidParamsError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError([f"profile: error initializing {profile_type} profile: {e}"]) from e
