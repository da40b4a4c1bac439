# dynamics/intensity_profiles.py

"""
Laser intensity during the trap quench.

The trap stiffness follows the intensity, ω²(t) = ω₀² I(t)/I₀, and the
potential minimum moves with it, z_k(t) = χ(1 − I(t)/I₀). Three profile
families are provided:

- QuenchProfile: linear onset blended into an exponential decay by a tanh
  weight R(t) = ½(1 + tanh((t − t_s)/T_s)). The exponential branch reaches
  qI₀ exactly at t₀ + 5τ_exp and is held there; the linear branch is floored
  at qI₀. Both branches equal I₀ before t₀, so I(t) is continuous and
  bounded by [qI₀, I₀].
- StepProfile: sudden quench at t₀, the case with closed-form solutions.
- DataDrivenProfile: a measured intensity trace, linearly interpolated.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from quench_accel.exceptions import InvalidParamsError, NumericalError
from quench_accel.model.params import PhysicalParams

ArrayLike = Union[float, np.ndarray]

# the exponential branch is normalised to complete its drop after this many time constants
EXP_SPAN = 5.0
_EXP_NORM = 1.0 - math.exp(-EXP_SPAN)


class ProfileType(Enum):
    BLENDED = "blended"
    EXPONENTIAL = "exponential"
    STEP = "step"
    DATA = "data"


class IntensityProfile(ABC):
    """
    Abstract intensity-versus-time model.

    Subclasses provide `get_value(t)` (vectorised over numpy arrays), the
    pre-quench intensity `intensity0`, the quench start `t0` and the time
    `quench_end` after which the intensity is considered settled.
    """

    intensity0: float
    t0: float

    @abstractmethod
    def get_value(self, t: ArrayLike) -> ArrayLike:
        """
        Intensity at time(s) t, in the units of `intensity0`.

        Args:
            t: Time or array of times (s).
        """
        pass

    @property
    @abstractmethod
    def final_ratio(self) -> float:
        """q = I_final/I₀."""
        pass

    @property
    @abstractmethod
    def quench_end(self) -> float:
        pass

    def one_over_e_time(self) -> float:
        """
        Time after t₀ at which the intensity has completed all but 1/e of its
        total drop, i.e. I = qI₀ + (1 − q)I₀/e.
        """
        q = self.final_ratio
        target = self.intensity0 * (q + (1.0 - q) / math.e)
        end = self.quench_end
        if end <= self.t0:
            return 0.0
        return brentq(lambda t: float(self.get_value(t)) - target, self.t0, end, xtol=1e-15, rtol=1e-12) - self.t0


@dataclass(frozen=True)
class QuenchProfile(IntensityProfile):
    """
    Blended linear + exponential intensity quench.

    Attributes:
        intensity0: Pre-quench intensity I₀ (any unit, only ratios matter).
        q: Final/initial intensity ratio, 0 < q < 1.
        tau_exp: 1/e constant of the exponential branch (s).
        t0: Quench start (s).
        ts: Centre of the tanh blend (s).
        Ts: Width of the blend and time scale of the linear ramp (s).
        blend: If False the profile is the pure exponential branch.
    """
    intensity0: float
    q: float
    tau_exp: float
    t0: float = 0.0
    ts: float = 0.0
    Ts: float = 1.0
    blend: bool = True

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise InvalidParamsError(f"0 < q < 1 violated: q={self.q}")
        if not self.tau_exp > 0:
            raise InvalidParamsError(f"tau_exp > 0 violated: tau_exp={self.tau_exp}")
        if not self.Ts > 0:
            raise InvalidParamsError(f"Ts > 0 violated: Ts={self.Ts}")
        if not self.intensity0 > 0:
            raise InvalidParamsError(f"intensity0 > 0 violated: intensity0={self.intensity0}")

    @classmethod
    def for_tau(cls, params: PhysicalParams, tau: float, t0: float = 0.0, intensity0: float = 1.0,
                blend: bool = True) -> 'QuenchProfile':
        """
        Default synthetic profile for a quench time constant τ between the
        trap frequencies of `params` (q = ω₁²/ω₀², t_s = t₀ + τ/2, T_s = τ).
        """
        return cls(
            intensity0=intensity0,
            q=(params.omega1 / params.omega0) ** 2,
            tau_exp=tau,
            t0=t0,
            ts=t0 + 0.5 * tau,
            Ts=tau,
            blend=blend,
        )

    @property
    def final_ratio(self) -> float:
        return self.q

    @property
    def quench_end(self) -> float:
        return self.t0 + EXP_SPAN * self.tau_exp

    def exponential_branch(self, t: ArrayLike) -> ArrayLike:
        u = np.clip((np.asarray(t, dtype=float) - self.t0) / self.tau_exp, 0.0, EXP_SPAN)
        return self.intensity0 * (1.0 + (self.q - 1.0) * (-np.expm1(-u)) / _EXP_NORM)

    def linear_branch(self, t: ArrayLike) -> ArrayLike:
        u = np.maximum((np.asarray(t, dtype=float) - self.t0) / self.Ts, 0.0)
        return self.intensity0 * np.maximum(1.0 + (self.q - 1.0) * u, self.q)

    def blend_weight(self, t: ArrayLike) -> ArrayLike:
        return 0.5 * (1.0 + np.tanh((np.asarray(t, dtype=float) - self.ts) / self.Ts))

    def get_value(self, t: ArrayLike) -> ArrayLike:
        i_exp = self.exponential_branch(t)
        if not self.blend:
            return i_exp
        r = self.blend_weight(t)
        return self.linear_branch(t) * (1.0 - r) + i_exp * r


@dataclass(frozen=True)
class StepProfile(IntensityProfile):
    """
    Sudden quench: I = I₀ for t < t₀ and qI₀ from t₀ on.
    """
    intensity0: float
    q: float
    t0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise InvalidParamsError(f"0 < q <= 1 violated: q={self.q}")
        if not self.intensity0 > 0:
            raise InvalidParamsError(f"intensity0 > 0 violated: intensity0={self.intensity0}")

    @classmethod
    def for_params(cls, params: PhysicalParams, t0: float = 0.0, intensity0: float = 1.0) -> 'StepProfile':
        return cls(intensity0=intensity0, q=(params.omega1 / params.omega0) ** 2, t0=t0)

    @property
    def final_ratio(self) -> float:
        return self.q

    @property
    def quench_end(self) -> float:
        return self.t0

    def get_value(self, t: ArrayLike) -> ArrayLike:
        t = np.asarray(t, dtype=float)
        return np.where(t < self.t0, self.intensity0, self.q * self.intensity0)


class DataDrivenProfile(IntensityProfile):
    """
    Intensity profile defined by a sampled trace.

    Values between samples are linearly interpolated; outside the sampled
    range the first/last sample is held.
    """

    def __init__(self, times: np.ndarray, values: np.ndarray, settle_fraction: float = 0.01):
        """
        Args:
            times: Strictly increasing sample times (s).
            values: Intensities at those times; the first is taken as I₀.
            settle_fraction: Residual fraction of the total drop that counts as settled.
        """
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.size < 2 or times.shape != values.shape:
            raise InvalidParamsError("DataDrivenProfile needs matching time and value arrays of length >= 2")
        if np.any(np.diff(times) <= 0):
            raise InvalidParamsError("DataDrivenProfile times must be strictly increasing")
        self.times = times
        self.values = values
        self.intensity0 = float(values[0])
        self.t0 = float(times[0])
        self.settle_fraction = settle_fraction

    @classmethod
    def from_csv(cls, data_file: str, time_column: str = 't_s', value_column: str = 'intensity') -> 'DataDrivenProfile':
        data = pd.read_csv(data_file)
        return cls(data[time_column].to_numpy(dtype=float), data[value_column].to_numpy(dtype=float))

    @property
    def final_ratio(self) -> float:
        return float(self.values[-1] / self.values[0])

    @property
    def quench_end(self) -> float:
        drop = abs(self.values[0] - self.values[-1])
        unsettled = np.abs(self.values - self.values[-1]) > self.settle_fraction * drop
        if not np.any(unsettled):
            return self.t0
        return float(self.times[np.nonzero(unsettled)[0][-1]])

    def get_value(self, t: ArrayLike) -> ArrayLike:
        return np.interp(t, self.times, self.values)


def intensity(profile: IntensityProfile, t: ArrayLike) -> ArrayLike:
    """Laser intensity I(t) of `profile`."""
    return profile.get_value(t)


def omega_of_t(params: PhysicalParams, profile: IntensityProfile, t: ArrayLike) -> ArrayLike:
    """
    Trap angular frequency ω(t) = ω₀√(I(t)/I₀).

    Raises:
        NumericalError: If the intensity is not positive at any requested time.
    """
    ratio = np.asarray(intensity(profile, t), dtype=float) / profile.intensity0
    if np.any(ratio <= 0):
        raise NumericalError("Intensity must stay positive to define a trap frequency")
    result = params.omega0 * np.sqrt(ratio)
    return float(result) if result.ndim == 0 else result


def omega_sq_of_t(params: PhysicalParams, profile: IntensityProfile, t: ArrayLike) -> np.ndarray:
    """ω²(t) = ω₀² I(t)/I₀ without the square root."""
    ratio = np.asarray(intensity(profile, t), dtype=float) / profile.intensity0
    if np.any(ratio <= 0):
        raise NumericalError("Intensity must stay positive to define a trap frequency")
    return params.omega0 ** 2 * ratio


def trap_shift(params: PhysicalParams, profile: IntensityProfile, t: ArrayLike) -> ArrayLike:
    """Displacement of the potential minimum z_k(t) = χ(1 − I(t)/I₀)."""
    result = params.chi * (1.0 - np.asarray(intensity(profile, t), dtype=float) / profile.intensity0)
    return float(result) if np.ndim(result) == 0 else result
