# measurement/pipeline.py

"""
Synthetic tilt-sweep measurement of the single-shot sensitivity.

At the measurement time the state is simulated for a handful of table
tilts, N shots are drawn per tilt and each histogram is fitted with the
folded-normal model. The fitted centres against tilt give dμ/dθ, hence
dμ/da; the fitted widths are averaged with inverse-variance weights. Both
carry standard errors, so the resulting S has an error bar of the kind a
real tilt sweep produces.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from quench_accel.dynamics.intensity_profiles import IntensityProfile
from quench_accel.dynamics.moment_dynamics import DEFAULT_DT_OUT, integrate_batch
from quench_accel.exceptions import InvalidParamsError
from quench_accel.measurement.fits import FoldedFit, LineFit, fit_folded_normal, tilt_sweep_slope
from quench_accel.measurement.shots import DEFAULT_SHOTS, sample_shots
from quench_accel.model.params import PhysicalParams
from quench_accel.model.state import GaussianState
from quench_accel.uncertainty.propagation import (
    Measured,
    apply_calibration,
    sensitivity_uncertainty,
    slope_to_dmu_da,
    weighted_mean,
)

DEFAULT_TILTS = tuple(math.radians(d) for d in (-1.0, -0.5, 0.0, 0.5, 1.0))


@dataclass(frozen=True)
class SweepMeasurement:
    """
    Attributes:
        sensitivity: S with its propagated error (s²/m).
        dmu_da: dμ/da from the tilt slope (s²).
        sigma: Weighted mean width (m).
        line: Straight-line fit of μ against tilt.
        fits: Folded-normal fit per tilt.
        tilts: Table tilts (rad).
    """
    sensitivity: Measured
    dmu_da: Measured
    sigma: Measured
    line: LineFit
    fits: List[FoldedFit]
    tilts: Sequence[float]

    def to_report(self) -> Dict[str, float]:
        return {
            **self.sensitivity.to_report('S_s2pm'),
            **self.dmu_da.to_report('dmu_da_s2'),
            **self.sigma.to_report('sigma_m'),
            'slope_mprad': self.line.slope,
            'slope_se_mprad': self.line.se_slope,
        }


def states_at(params: PhysicalParams, profile: IntensityProfile, tilts: Sequence[float], t: float,
              heating: Optional[float] = None, dt_out: float = DEFAULT_DT_OUT) -> List[GaussianState]:
    """Gaussian state at time t for each table tilt, from one batched integration."""
    accelerations = params.gravity * np.sin(np.asarray(tilts, dtype=float) + params.theta0)
    heating = params.heating_rate if heating is None else heating
    _, moments = integrate_batch(params, profile, accelerations, t, heating_rates=heating, dt_out=dt_out)
    return [GaussianState.from_numpy(moments[:, b, -1]) for b in range(len(tilts))]


def measure_sensitivity(
        params: PhysicalParams,
        profile: IntensityProfile,
        t_measure: float,
        tilts: Sequence[float] = DEFAULT_TILTS,
        shots: int = DEFAULT_SHOTS,
        seed: int = 0,
        heating: Optional[float] = None,
        calibration: float = 0.0,
        dt_out: float = DEFAULT_DT_OUT,
        logger: Optional[logging.Logger] = None,
) -> SweepMeasurement:
    """
    Runs the synthetic tilt sweep at `t_measure`.

    Args:
        params: Physical parameters.
        profile: Intensity profile.
        t_measure: Measurement time after the quench start (s).
        tilts: Table tilts (rad), at least 3 distinct values.
        shots: Shots per tilt.
        seed: Seed of the first tilt; tilt k uses seed + k.
        heating: Heating rate (K/s); params.heating_rate when None.
        calibration: Relative uncertainty of the displacement calibration.
        dt_out: Output spacing of the integration; t_measure should be a multiple of it.
        logger: Optional logger.
    """
    if len(set(tilts)) < 3:
        raise InvalidParamsError("measure_sensitivity needs at least 3 distinct tilts")
    states = states_at(params, profile, tilts, t_measure, heating=heating, dt_out=dt_out)
    fits = []
    for k, (tilt, state) in enumerate(zip(tilts, states)):
        shot_set = sample_shots(state, n=shots, seed=seed + k, measure_time=t_measure, tilt=tilt)
        fits.append(fit_folded_normal(shot_set, logger=logger))
    line = tilt_sweep_slope([(tilt, fit.mu, fit.se_mu) for tilt, fit in zip(tilts, fits)])
    slope = Measured(abs(line.slope), line.se_slope)
    dmu_da = slope_to_dmu_da(slope, params.gravity, tilt=0.0, theta0=params.theta0)
    sigma = weighted_mean([Measured(fit.sigma, fit.se_sigma) for fit in fits])
    factor = Measured(1.0, calibration)
    dmu_da, sigma = apply_calibration(dmu_da, factor), apply_calibration(sigma, factor)
    sensitivity = sensitivity_uncertainty(dmu_da, sigma)
    if logger:
        logger.debug(f"Tilt sweep at t={t_measure:.3e} s: S={sensitivity.value:.4e} ± {sensitivity.sigma:.1e} s²/m")
    return SweepMeasurement(sensitivity=sensitivity, dmu_da=dmu_da, sigma=sigma, line=line, fits=fits,
                            tilts=tuple(tilts))
