# heating/inference.py

"""
Inference of the heating rate from σ(t) traces.

Every candidate Γ_heat on a grid (0–40 mK/s in 0.25 mK/s steps by default)
is simulated for each quench profile in one batched integration. The
objective sums the squared relative residuals (σ_obs/σ_model − 1)² over all
traces; its grid minimum is refined with a parabola through the three
neighbouring points and the curvature gives the uncertainty.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from quench_accel.defs import Trace, trace_to_arrays
from quench_accel.dynamics.intensity_profiles import IntensityProfile, QuenchProfile
from quench_accel.dynamics.moment_dynamics import DEFAULT_DT_OUT, integrate_batch
from quench_accel.exceptions import HeatingInferenceError, InvalidParamsError
from quench_accel.metrology.sensitivity import analysis_end
from quench_accel.model.params import PhysicalParams
from quench_accel.utils.logger import setup_logger

GRID_MAX = 40e-3
GRID_STEP = 0.25e-3

SigmaTrace = Tuple[float, Trace]


def default_grid() -> np.ndarray:
    return np.round(np.arange(0.0, GRID_MAX + 0.5 * GRID_STEP, GRID_STEP), 12)


@dataclass(frozen=True, eq=False)
class HeatingInference:
    """
    Attributes:
        rate: Best-fit heating rate (K/s).
        uncertainty: One-sigma uncertainty from the objective curvature (K/s).
        grid: Heating rates scanned (K/s).
        objective: Objective value at each grid point.
        n_points: Number of σ samples used.
    """
    rate: float
    uncertainty: float
    grid: np.ndarray = field(repr=False)
    objective: np.ndarray = field(repr=False)
    n_points: int = 0

    def __iter__(self):
        return iter((self.rate, self.uncertainty))

    def to_report(self) -> Dict[str, object]:
        return {'heating_rate_Kps': self.rate, 'uncertainty_Kps': self.uncertainty, 'n_points': self.n_points,
                'grid_min_Kps': float(self.grid[0]), 'grid_max_Kps': float(self.grid[-1]),
                'grid_step_Kps': float(self.grid[1] - self.grid[0])}


def load_sigma_trace(path: str) -> SigmaTrace:
    """
    Reads a σ-trace CSV with columns `t_s,sigma_m` and a `tau_s` field,
    either as a constant column or in a JSON sidecar `<path>.json`.
    """
    data = pd.read_csv(path)
    missing = [c for c in ('t_s', 'sigma_m') if c not in data.columns]
    if missing:
        raise InvalidParamsError(f"{path}: missing column(s) {missing}")
    if 'tau_s' in data.columns:
        tau = float(data['tau_s'].iloc[0])
    else:
        try:
            with open(path + '.json') as f:
                tau = float(json.load(f)['tau_s'])
        except (FileNotFoundError, KeyError) as e:
            raise InvalidParamsError(f"{path}: no tau_s column or sidecar field") from e
    return tau, np.column_stack((data['t_s'].to_numpy(dtype=float), data['sigma_m'].to_numpy(dtype=float)))


class HeatingRateEstimator:
    """
    Grid-scan heating-rate estimator with a per-profile simulation cache.

    Repeated inferences over new traces for the same profiles reuse the
    simulated σ(t; Γ) grid, so the Monte-Carlo cost is dominated by the first
    call.
    """

    def __init__(self, params: PhysicalParams, grid: Optional[Sequence[float]] = None,
                 dt: Optional[float] = None, dt_out: float = DEFAULT_DT_OUT,
                 log_file: Optional[str] = None):
        """
        Args:
            params: Physical parameters (heating_rate is ignored).
            grid: Equally spaced heating rates to scan (K/s), at least 3.
            dt: RK4 step (s).
            dt_out: Simulation output spacing (s).
            log_file: Optional log file path.
        """
        self.params = params
        self.grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        if self.grid.size < 3 or np.any(np.diff(self.grid) <= 0):
            raise InvalidParamsError("Heating grid needs at least 3 increasing values")
        if not np.allclose(np.diff(self.grid), self.grid[1] - self.grid[0]):
            raise InvalidParamsError("Heating grid must be equally spaced")
        self.dt = dt
        self.dt_out = dt_out
        self.logger = setup_logger('HeatingRateEstimator', log_file)
        self._cache: Dict[Hashable, Tuple[np.ndarray, np.ndarray]] = {}

    def simulated_sigma(self, profile: IntensityProfile, t_end: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        σ(t; Γ) for every grid value, shape (G, N), simulated once per profile
        and extended when a longer span is requested.
        """
        cached = self._cache.get(profile)
        if cached is not None and cached[0][-1] >= t_end - 1e-12:
            return cached
        self.logger.info(f"Simulating {self.grid.size} heating rates up to {t_end:.3e} s")
        span = self.dt_out * np.ceil(t_end / self.dt_out - 1e-9)
        times, moments = integrate_batch(self.params, profile, 0.0, span, heating_rates=self.grid,
                                         dt=self.dt, dt_out=self.dt_out, logger=self.logger)
        result = (times, np.sqrt(moments[2]))
        self._cache[profile] = result
        return result

    def objective(self, traces: Sequence[Tuple[IntensityProfile, np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, int]:
        """Σ (σ_obs/σ_model − 1)² per grid value and the number of samples used."""
        total = np.zeros(self.grid.size)
        n_points = 0
        for profile, t_obs, sigma_obs in traces:
            times, sigma_grid = self.simulated_sigma(profile, float(np.max(t_obs)))
            model = np.array([np.interp(t_obs, times, row) for row in sigma_grid])
            total += np.sum((sigma_obs[None, :] / model - 1.0) ** 2, axis=1)
            n_points += t_obs.size
        return total, n_points

    def infer(self, traces: Sequence[Tuple[IntensityProfile, Trace]]) -> HeatingInference:
        """
        Best-fit heating rate for (profile, trace) pairs.

        Raises:
            InvalidParamsError: No traces, or samples before the quench start at t = 0.
            HeatingInferenceError: If the minimum lies on the grid boundary.
        """
        if not traces:
            raise InvalidParamsError("infer needs at least one trace")
        prepared = []
        for profile, trace in traces:
            t_obs, sigma_obs = trace_to_arrays(trace)
            if np.any(t_obs < 0):
                raise InvalidParamsError("σ traces must be aligned to the quench start (t >= 0)")
            prepared.append((profile, t_obs, sigma_obs))
        chi2, n_points = self.objective(prepared)

        i = int(np.argmin(chi2))
        if i == 0 or i == self.grid.size - 1:
            self.logger.warning(f"Heating objective minimum on grid boundary at {self.grid[i]:.4e} K/s")
            raise HeatingInferenceError(
                f"Heating-rate minimum at grid boundary {self.grid[i]:.4e} K/s; widen the grid", rate=float(self.grid[i])
            )
        h = self.grid[1] - self.grid[0]
        left, mid, right = chi2[i - 1], chi2[i], chi2[i + 1]
        denom = left - 2.0 * mid + right
        if denom > 0:
            offset = 0.5 * h * (left - right) / denom
            chi2_min = mid - (left - right) ** 2 / (8.0 * denom)
            curvature = denom / h ** 2
            residual_var = max(chi2_min, 0.0) / max(n_points - 1, 1)
            uncertainty = float(np.sqrt(2.0 * residual_var / curvature))
        else:
            offset = 0.0
            uncertainty = float('inf')
        rate = float(self.grid[i] + offset)
        self.logger.info(f"Inferred heating rate {rate * 1e3:.3f} ± {uncertainty * 1e3:.3f} mK/s from {n_points} samples")
        return HeatingInference(rate=rate, uncertainty=uncertainty, grid=self.grid.copy(), objective=chi2,
                                n_points=n_points)


def _profiles_for(params: PhysicalParams, sigma_traces: Sequence[SigmaTrace],
                  profiles: Optional[Sequence[IntensityProfile]]) -> List[IntensityProfile]:
    if profiles is None:
        return [QuenchProfile.for_tau(params, tau) for tau, _ in sigma_traces]
    if len(profiles) != len(sigma_traces):
        raise InvalidParamsError("One profile per σ trace is required")
    return list(profiles)


def infer_heating_rate(sigma_traces: Sequence[SigmaTrace], params: PhysicalParams,
                       profiles: Optional[Sequence[IntensityProfile]] = None,
                       estimator: Optional[HeatingRateEstimator] = None) -> HeatingInference:
    """
    Heating rate minimising the σ deviations over all traces.

    Args:
        sigma_traces: (τ, trace) pairs; traces are (t, σ) samples aligned to the quench start.
        params: Physical parameters.
        profiles: Intensity profile per trace; the default synthetic profile for each τ when None.
        estimator: Estimator to reuse (keeps its simulation cache).
    """
    estimator = estimator or HeatingRateEstimator(params)
    chosen = _profiles_for(params, sigma_traces, profiles)
    return estimator.infer([(profile, trace) for profile, (_, trace) in zip(chosen, sigma_traces)])


def synthesize_sigma_traces(params: PhysicalParams, taus: Sequence[float], heating: float,
                            noise: float = 0.05, seed: int = 0, dt_out: float = DEFAULT_DT_OUT,
                            estimator: Optional[HeatingRateEstimator] = None) -> List[SigmaTrace]:
    """
    σ(t) traces for the default profile of each τ at one heating rate, with
    multiplicative Gaussian noise of relative size `noise`.

    Each trace runs from the quench start to the quench end plus 1.25
    post-quench periods.
    """
    rng = np.random.default_rng(seed)
    traces = []
    for tau in taus:
        profile = QuenchProfile.for_tau(params, tau)
        t_end = analysis_end(params, profile)
        if estimator is not None and heating in estimator.grid:
            times, sigma_grid = estimator.simulated_sigma(profile, t_end)
            j = int(np.nonzero(estimator.grid == heating)[0][0])
            n = int(np.floor(t_end / dt_out + 1e-9)) + 1
            times, sigma = times[:n], sigma_grid[j, :n]
        else:
            times, moments = integrate_batch(params, profile, 0.0, t_end, heating_rates=heating, dt_out=dt_out)
            sigma = np.sqrt(moments[2, 0])
        noisy = sigma * (1.0 + noise * rng.standard_normal(sigma.size))
        traces.append((tau, np.column_stack((times, noisy))))
    return traces
