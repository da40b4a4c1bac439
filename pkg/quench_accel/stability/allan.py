# stability/allan.py

"""
Long-term stability of the accelerometer.

Per-cycle amplitudes are converted to accelerations through the tilt slope,
θ_k = A_k/(dμ/dθ) + θ₀ and a_k = gθ_k, and the overlapping Allan deviation of
the resulting series is evaluated for every averaging factor
m = 1 … ⌊(N − 1)/2⌋ at t_A = m/f_s. The acceleration samples are treated as
frequency-like data, i.e. σ²(t_A) = ⟨(ā_{j+m} − ā_j)²⟩/2 with ā_j the mean of
m consecutive samples; the estimator itself comes from allantools.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import allantools
import numpy as np
import pandas as pd

from quench_accel.dynamics.intensity_profiles import IntensityProfile
from quench_accel.dynamics.moment_dynamics import DEFAULT_DT_OUT, integrate
from quench_accel.exceptions import InvalidParamsError
from quench_accel.metrology.sensitivity import DEFAULT_DELTA_A, T_OPT_THRESHOLD, optimal_sensitivity
from quench_accel.model.params import PhysicalParams, acceleration_from_tilt

DEFAULT_SAMPLE_RATE = 3.0
MIN_SERIES = 5
MIN_SYNTH_SAMPLES = 10


class AccelSeries:
    """
    Acceleration samples taken at a fixed rate.

    Attributes:
        values: Accelerations (m/s²).
        sample_rate: f_s (Hz).
    """

    def __init__(self, values: Iterable[float], sample_rate: float = DEFAULT_SAMPLE_RATE):
        self.values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
        self.sample_rate = float(sample_rate)
        if not self.sample_rate > 0:
            raise InvalidParamsError(f"sample_rate > 0 violated: sample_rate={sample_rate}")
        if self.values.size < MIN_SERIES:
            raise InvalidParamsError(f"AccelSeries needs at least {MIN_SERIES} samples, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParamsError("AccelSeries values must be finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def duration(self) -> float:
        return self.values.size / self.sample_rate

    def to_csv(self, path: str) -> str:
        pd.DataFrame({'a_mps2': self.values}).to_csv(path, index=False, float_format='%.12e')
        sidecar = path + '.json'
        with open(sidecar, 'w') as f:
            json.dump({'sample_rate_hz': self.sample_rate, 'count': len(self)}, f, indent=2, sort_keys=True)
        return sidecar

    @classmethod
    def from_csv(cls, path: str, sample_rate: Optional[float] = None) -> 'AccelSeries':
        """Reads `a_mps2`; f_s comes from the argument, else the JSON sidecar, else 3 Hz."""
        data = pd.read_csv(path)
        if 'a_mps2' not in data.columns:
            raise InvalidParamsError(f"{path}: missing column 'a_mps2'")
        if sample_rate is None:
            try:
                with open(path + '.json') as f:
                    sample_rate = float(json.load(f)['sample_rate_hz'])
            except FileNotFoundError:
                sample_rate = DEFAULT_SAMPLE_RATE
        return cls(data['a_mps2'].to_numpy(dtype=float), sample_rate)


@dataclass(frozen=True, eq=False)
class AllanSeries:
    """
    Attributes:
        integration_times: t_A = m/f_s (s), strictly increasing.
        deviations: σ_A(t_A) (m/s²), non-negative.
        terms: Number of window differences averaged at each point, N − 2m + 1.
    """
    integration_times: np.ndarray
    deviations: np.ndarray
    terms: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.integration_times) <= 0):
            raise InvalidParamsError("AllanSeries integration_times must be strictly increasing")
        if np.any(self.deviations < 0):
            raise InvalidParamsError("AllanSeries deviations must be non-negative")

    def __len__(self) -> int:
        return self.integration_times.size

    def floor(self) -> Tuple[float, float]:
        """(t_A, σ_A) at the smallest deviation."""
        i = int(np.argmin(self.deviations))
        return float(self.integration_times[i]), float(self.deviations[i])

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({'t_A_s': self.integration_times, 'allan_mps2': self.deviations,
                             'terms': self.terms.astype(int)})


@dataclass(frozen=True)
class DriftModel:
    """
    Slow drift added to the acceleration during long-run synthesis.

    Attributes:
        linear_rate: Linear drift (m/s³).
        sine_amplitude: Amplitude of a slow oscillation (m/s²).
        sine_period: Period of that oscillation (s).
    """
    linear_rate: float = 0.0
    sine_amplitude: float = 0.0
    sine_period: float = 1800.0

    def __post_init__(self):
        if not self.sine_period > 0:
            raise InvalidParamsError(f"sine_period > 0 violated: sine_period={self.sine_period}")

    @property
    def enabled(self) -> bool:
        return self.linear_rate != 0.0 or self.sine_amplitude != 0.0

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.linear_rate * t + self.sine_amplitude * np.sin(2.0 * math.pi * t / self.sine_period)


def to_acceleration(amplitudes: Sequence[float], slope: float, theta0: float, g: float,
                    f_s: float = DEFAULT_SAMPLE_RATE) -> AccelSeries:
    """
    Converts amplitudes to accelerations: θ_k = A_k/slope + θ₀, a_k = g·θ_k.

    Args:
        amplitudes: Per-cycle amplitudes A_k (m).
        slope: dμ/dθ (m/rad).
        theta0: Zero-reference tilt θ₀ (rad).
        g: Gravitational acceleration (m/s²).
        f_s: Sampling frequency (Hz).

    Raises:
        InvalidParamsError: If slope is zero.
    """
    if slope == 0:
        raise InvalidParamsError("slope != 0 violated")
    theta = np.asarray(amplitudes, dtype=float) / slope + theta0
    return AccelSeries(g * theta, f_s)


def from_acceleration(series: AccelSeries, slope: float, theta0: float, g: float) -> np.ndarray:
    """Inverse of `to_acceleration`: A_k = slope·(a_k/g − θ₀)."""
    if g == 0:
        raise InvalidParamsError("g != 0 violated")
    return slope * (series.values / g - theta0)


def overlapping_allan(series: AccelSeries, factors: Optional[Sequence[int]] = None) -> AllanSeries:
    """
    Overlapping Allan deviation of an acceleration series.

    Args:
        series: Samples at rate f_s.
        factors: Averaging factors m; every m in 1 … ⌊(N − 1)/2⌋ when None.

    Raises:
        InvalidParamsError: Series too short or a factor outside the valid range.
    """
    n = len(series)
    if n < MIN_SERIES:
        raise InvalidParamsError(f"Allan analysis needs at least {MIN_SERIES} samples, got {n}")
    m_max = (n - 1) // 2
    if factors is None:
        m = np.arange(1, m_max + 1)
    else:
        m = np.unique(np.asarray(factors, dtype=int))
        if m.size == 0 or m[0] < 1 or m[-1] > m_max:
            raise InvalidParamsError(f"Averaging factors must lie in 1..{m_max}")
    rate = series.sample_rate
    centred = series.values - np.mean(series.values)
    taus, devs, _, ns = allantools.oadev(centred, rate=rate, data_type='freq', taus=m / rate)
    return AllanSeries(np.asarray(taus, dtype=float), np.asarray(devs, dtype=float), np.asarray(ns, dtype=int))


def synthesize_long_run(
        params: PhysicalParams,
        profile: IntensityProfile,
        heating: Optional[float] = None,
        tilt: float = 0.0,
        shots_per_point: int = 1,
        duration: float = 3 * 3600.0,
        seed: int = 0,
        sample_rate: float = DEFAULT_SAMPLE_RATE,
        drift: Optional[DriftModel] = None,
        delta_a: float = DEFAULT_DELTA_A,
        threshold: float = T_OPT_THRESHOLD,
        logger: Optional[logging.Logger] = None,
) -> AccelSeries:
    """
    Emulates a long accelerometer run.

    The state at T_opt is simulated once for the acceleration of `tilt`. Each
    cycle k then draws `shots_per_point` readouts |z| from that state, with
    the mean shifted by dμ/da times the drift at t_k, averages them into the
    amplitude A_k and converts it with the operating-point slope
    dμ/dθ = g·cos(θ + θ₀)·d|⟨z⟩|/da.

    Raises:
        InvalidParamsError: If duration·f_s gives fewer than 10 samples.
    """
    n = int(math.floor(duration * sample_rate + 1e-9))
    if n < MIN_SYNTH_SAMPLES:
        raise InvalidParamsError(f"duration·f_s must give at least {MIN_SYNTH_SAMPLES} samples, got {n}")
    if shots_per_point < 1:
        raise InvalidParamsError(f"shots_per_point >= 1 violated: {shots_per_point}")

    opt = optimal_sensitivity(params, profile, heating=heating, delta_a=delta_a, threshold=threshold,
                              logger=logger)
    a = acceleration_from_tilt(params, tilt)
    state = integrate(params, profile, a, opt.t_opt, dt_out=DEFAULT_DT_OUT, heating=heating)[-1]
    sign = 1.0 if state.mean_z >= 0 else -1.0
    slope = sign * opt.dmu_da * params.gravity * math.cos(tilt + params.theta0)

    rng = np.random.default_rng(seed)
    times = np.arange(n) / sample_rate
    shift = np.zeros(n) if drift is None or not drift.enabled else opt.dmu_da * drift.evaluate(times)
    z = rng.normal(loc=(state.mean_z + shift)[:, None], scale=state.sigma_z, size=(n, shots_per_point))
    amplitudes = np.mean(np.abs(z), axis=1)
    if logger:
        logger.info(f"Long run: {n} samples at {sample_rate} Hz, T_opt={opt.t_opt:.3e} s, "
                    f"S={opt.sensitivity:.3e} s²/m, slope={slope:.3e} m/rad")
    return to_acceleration(amplitudes, slope, params.theta0, params.gravity, sample_rate)
