# metrology/sensitivity.py

"""
Single-shot sensitivity S(t) = (dμ/da)/σ and the optimal measurement time.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from quench_accel.defs import Trace, trace_to_arrays
from quench_accel.dynamics.intensity_profiles import IntensityProfile, QuenchProfile
from quench_accel.dynamics.moment_dynamics import DEFAULT_DT_OUT, integrate_batch
from quench_accel.exceptions import InvalidParamsError, NumericalError
from quench_accel.metrology.qfi import BoundRatio, bound_check, qfi_half_period
from quench_accel.model.params import PhysicalParams, acceleration_from_tilt

DEFAULT_DELTA_A = 0.01
# quench time constant separating the σ-minimum rule from the dμ/da-maximum rule (s)
T_OPT_THRESHOLD = 30e-6
# post-quench periods simulated after the quench has settled
WINDOW_PERIODS = 1.25
# largest accepted |second difference| / |first difference| of the mean response
LINEARITY_TOL = 0.01

SENSITIVITY_COLUMNS = ('t_s', 'S_s2pm', 'dmu_da_s2', 'sigma_m')


class SensitivityCurve:
    """
    S(t), dμ/da and σ sampled on a common time grid.

    Attributes:
        times: Sample times (s).
        S_values: |dμ/da|/σ (s²/m).
        dmu_da: Signed ∂⟨z⟩/∂a (s²).
        sigma: Position spread √V_z (m).
    """

    def __init__(self, times, S_values, dmu_da, sigma):
        self.times = np.asarray(times, dtype=float)
        self.S_values = np.asarray(S_values, dtype=float)
        self.dmu_da = np.asarray(dmu_da, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        n = self.times.size
        if n == 0 or any(arr.shape != (n,) for arr in (self.S_values, self.dmu_da, self.sigma)):
            raise InvalidParamsError("SensitivityCurve arrays must be nonempty and of equal length")
        if np.any(self.sigma <= 0):
            raise InvalidParamsError("SensitivityCurve sigma must be positive")

    def __len__(self) -> int:
        return self.times.size

    def at(self, t: float) -> float:
        """S at time t, linearly interpolated."""
        return float(np.interp(t, self.times, self.S_values))

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(dict(zip(SENSITIVITY_COLUMNS, (self.times, self.S_values, self.dmu_da, self.sigma))))


@dataclass(frozen=True)
class OptimalSensitivity:
    """
    Sensitivity at the optimal measurement time.

    Attributes:
        t_opt: Optimal measurement time (s).
        sensitivity: S(T_opt) (s²/m).
        dmu_da: dμ/da at T_opt (s²).
        sigma: σ at T_opt (m).
        qfi: Half-period QFI of the matching sudden quench (s⁴/m²).
        bound: S(T_opt)/√F_Q.
        curve: The full curve the optimum was read from.
    """
    t_opt: float
    sensitivity: float
    dmu_da: float
    sigma: float
    qfi: float
    bound: BoundRatio
    curve: SensitivityCurve

    def to_report(self) -> Dict[str, Any]:
        return {
            'T_opt_s': self.t_opt,
            'S_s2pm': self.sensitivity,
            'dmu_da_s2': self.dmu_da,
            'sigma_m': self.sigma,
            'F_Q_s4pm2': self.qfi,
            'bound_ratio': self.bound.ratio,
            'bound_violated': self.bound.violated,
        }


def profile_tau(profile: IntensityProfile) -> float:
    """Quench time constant of a profile: τ_exp if it has one, otherwise its 1/e time."""
    if isinstance(profile, QuenchProfile):
        return profile.tau_exp
    return profile.one_over_e_time()


def analysis_end(params: PhysicalParams, profile: IntensityProfile, periods: float = WINDOW_PERIODS) -> float:
    """End of the window in which T_opt is searched: quench end plus `periods` post-quench periods."""
    return profile.quench_end + periods * 2.0 * math.pi / params.omega1


def sensitivity_curve(
        params: PhysicalParams,
        profile: IntensityProfile,
        heating: Optional[float] = None,
        delta_a: float = DEFAULT_DELTA_A,
        a: Optional[float] = None,
        t_end: Optional[float] = None,
        dt: Optional[float] = None,
        dt_out: Optional[float] = DEFAULT_DT_OUT,
        logger: Optional[logging.Logger] = None,
) -> SensitivityCurve:
    """
    Computes S(t) by central differencing two integrations at a ± delta_a.

    A third run at a itself provides σ and the linearity check: the second
    difference of ⟨z⟩ must stay below 1% of the first difference. The trap
    shift cancels in the difference.

    Args:
        params: Physical parameters.
        profile: Intensity profile.
        heating: Heating rate (K/s); params.heating_rate when None.
        delta_a: Half-width of the finite difference (m/s²).
        a: Operating acceleration; g·sin θ₀ when None.
        t_end: Last time simulated (s); quench end plus 1.25 post-quench periods when None.
        dt: RK4 step (s).
        dt_out: Output spacing (s).
        logger: Optional logger.

    Raises:
        InvalidParamsError: delta_a not positive.
        NumericalError: Linearity check failure or degenerate variance.
    """
    if not delta_a > 0:
        raise InvalidParamsError(f"delta_a > 0 violated: delta_a={delta_a}")
    a = acceleration_from_tilt(params, 0.0) if a is None else a
    t_end = analysis_end(params, profile) if t_end is None else t_end
    heating = params.heating_rate if heating is None else heating
    accelerations = np.array([a - delta_a, a, a + delta_a])
    times, moments = integrate_batch(params, profile, accelerations, t_end, heating_rates=heating,
                                     dt=dt, dt_out=dt_out, logger=logger)
    mean_lo, mean_mid, mean_hi = moments[0]
    first = mean_hi - mean_lo
    second = mean_hi - 2.0 * mean_mid + mean_lo
    scale = np.max(np.abs(first))
    if scale == 0 or np.max(np.abs(second)) > LINEARITY_TOL * scale:
        raise NumericalError(
            f"Mean response is not linear in a over ±{delta_a} m/s²: "
            f"max second difference {np.max(np.abs(second)):.3e} m vs first difference {scale:.3e} m"
        )
    var_z = moments[2, 1]
    if np.any(var_z <= 0):
        raise NumericalError("Degenerate position variance in sensitivity curve")
    sigma = np.sqrt(var_z)
    dmu_da = first / (2.0 * delta_a)
    if logger:
        logger.debug(f"Sensitivity curve on {times.size} samples up to {t_end:.3e} s")
    return SensitivityCurve(times, np.abs(dmu_da) / sigma, dmu_da, sigma)


def find_t_opt(curve: SensitivityCurve, sigma_trace: Optional[Trace] = None, tau: float = 0.0,
               t0: float = 0.0, threshold: float = T_OPT_THRESHOLD) -> float:
    """
    Optimal measurement time.

    For quenches faster than `threshold` this is the first local minimum of σ
    after the quench has completed (t > t₀ + 5τ); for slower quenches it is
    the time maximising dμ/da after the quench. Ties go to the earliest time.

    Args:
        curve: Sensitivity curve providing dμ/da (and σ when no trace is given).
        sigma_trace: Optional (t, σ) samples used instead of curve.sigma.
        tau: Quench time constant (s).
        t0: Quench start (s).
        threshold: Regime boundary on tau (s).

    Raises:
        NumericalError: If no post-quench extremum is found.
    """
    settled = t0 + 5.0 * tau
    if tau < threshold:
        if sigma_trace is None:
            times, sigma = curve.times, curve.sigma
        else:
            times, sigma = trace_to_arrays(sigma_trace)
        if times.size < 3:
            raise NumericalError("σ trace too short to locate a minimum")
        interior = np.arange(1, times.size - 1)
        is_min = (sigma[interior] < sigma[interior - 1]) & (sigma[interior] <= sigma[interior + 1])
        candidates = interior[is_min & (times[interior] > settled)]
        if candidates.size == 0:
            raise NumericalError(f"No local minimum of σ after the quench completes at t={settled:.3e} s")
        return float(times[candidates[0]])
    mask = curve.times > settled
    if not np.any(mask):
        raise NumericalError(f"Curve ends before the quench completes at t={settled:.3e} s")
    idx = np.nonzero(mask)[0]
    best = idx[int(np.argmax(curve.dmu_da[idx]))]
    if best == curve.times.size - 1:
        raise NumericalError("dμ/da is still rising at the end of the curve; no post-quench maximum found")
    return float(curve.times[best])


def optimal_sensitivity(
        params: PhysicalParams,
        profile: IntensityProfile,
        heating: Optional[float] = None,
        delta_a: float = DEFAULT_DELTA_A,
        threshold: float = T_OPT_THRESHOLD,
        dt: Optional[float] = None,
        dt_out: Optional[float] = DEFAULT_DT_OUT,
        logger: Optional[logging.Logger] = None,
) -> OptimalSensitivity:
    """
    S at T_opt for one profile and heating rate, with the QFI bound ratio.

    The bound reference is the half-period QFI of the sudden quench between
    the same frequencies with the same n̄.
    """
    curve = sensitivity_curve(params, profile, heating=heating, delta_a=delta_a, dt=dt, dt_out=dt_out,
                              logger=logger)
    t_opt = find_t_opt(curve, tau=profile_tau(profile), t0=profile.t0, threshold=threshold)
    i = int(np.searchsorted(curve.times, t_opt))
    qfi = qfi_half_period(params).value
    bound = bound_check(curve.S_values[i], qfi)
    if bound.violated and logger:
        logger.warning(f"S/√F_Q = {bound.ratio:.6f} exceeds 1 at T_opt={t_opt:.3e} s")
    return OptimalSensitivity(
        t_opt=t_opt,
        sensitivity=float(curve.S_values[i]),
        dmu_da=float(curve.dmu_da[i]),
        sigma=float(curve.sigma[i]),
        qfi=qfi,
        bound=bound,
        curve=curve,
    )
