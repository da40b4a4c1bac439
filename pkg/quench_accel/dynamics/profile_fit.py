# dynamics/profile_fit.py

"""
Least-squares fit of the quench intensity model to a sampled trace.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from quench_accel.defs import Trace, trace_to_arrays
from quench_accel.dynamics.intensity_profiles import QuenchProfile
from quench_accel.exceptions import FitError, InvalidParamsError

MIN_SAMPLES = 10
# relative central-difference step of the numeric Jacobian
JACOBIAN_STEP = 1e-6
# singular-value ratio below which the Jacobian counts as rank deficient
RANK_TOL = 1e-10

BLENDED_FIELDS = ('intensity0', 'q', 'tau_exp', 't0', 'ts', 'Ts')
EXPONENTIAL_FIELDS = ('intensity0', 'q', 'tau_exp', 't0')


@dataclass(frozen=True)
class ProfileFit:
    """
    Result of `fit_profile`.

    Attributes:
        profile: Best-fit profile.
        standard_errors: One-sigma error per fitted field, same units as the field.
        rms_residual: Root-mean-square residual in intensity units.
        n_samples: Number of samples used.
    """
    profile: QuenchProfile
    standard_errors: Dict[str, float]
    rms_residual: float
    n_samples: int

    def to_report(self) -> Dict[str, Any]:
        fields = BLENDED_FIELDS if self.profile.blend else EXPONENTIAL_FIELDS
        units = {'intensity0': 'arb', 'q': '1', 'tau_exp': 's', 't0': 's', 'ts': 's', 'Ts': 's'}
        return {
            'model': 'blended' if self.profile.blend else 'exponential',
            'parameters': {name: getattr(self.profile, name) for name in fields},
            'standard_errors': dict(self.standard_errors),
            'units': {name: units[name] for name in fields},
            'one_over_e_time_s': self.profile.one_over_e_time(),
            'rms_residual': self.rms_residual,
            'n_samples': self.n_samples,
        }


def load_intensity_trace(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reads an intensity trace CSV with header `t_s,intensity`.

    Raises:
        InvalidParamsError: If a column is missing or the trace has fewer than two rows.
    """
    data = pd.read_csv(path)
    missing = [c for c in ('t_s', 'intensity') if c not in data.columns]
    if missing:
        raise InvalidParamsError(f"{path}: missing column(s) {missing}")
    if len(data) < 2:
        raise InvalidParamsError(f"{path}: intensity trace needs at least two rows")
    return data['t_s'].to_numpy(dtype=float), data['intensity'].to_numpy(dtype=float)


def _scales(init: QuenchProfile) -> Dict[str, float]:
    time_scale = init.tau_exp
    return {'intensity0': init.intensity0, 'q': 1.0, 'tau_exp': time_scale, 't0': time_scale,
            'ts': time_scale, 'Ts': time_scale}


def fit_profile(samples: Trace, init: QuenchProfile, max_nfev: int = 2000,
                logger: Optional[logging.Logger] = None) -> ProfileFit:
    """
    Fits the quench model to (t, intensity) samples.

    The fit runs in scaled coordinates (times in units of the initial τ,
    intensity in units of the initial I₀), minimising Σ(I_model − I_sample)²
    with a trust-region solver and central-difference Jacobians. When
    `init.blend` is False only (I₀, q, τ, t₀) are fitted; otherwise t_s and T_s
    are fitted as well.

    Args:
        samples: Sequence of (t, intensity) pairs or an (N, 2) array.
        init: Starting point; also selects the model family.
        max_nfev: Maximum number of model evaluations.
        logger: Optional logger.

    Returns:
        ProfileFit: Best-fit profile, standard errors and residual level.

    Raises:
        InvalidParamsError: Fewer than 10 samples.
        FitError: Non-convergence or rank-deficient Jacobian.
    """
    t, values = trace_to_arrays(samples)
    if t.size < MIN_SAMPLES:
        raise InvalidParamsError(f"fit_profile needs at least {MIN_SAMPLES} samples, got {t.size}")
    fields = BLENDED_FIELDS if init.blend else EXPONENTIAL_FIELDS
    scales = _scales(init)
    x0 = np.array([getattr(init, name) / scales[name] for name in fields])

    lower = np.full(x0.size, -np.inf)
    upper = np.full(x0.size, np.inf)
    for i, name in enumerate(fields):
        if name in ('intensity0', 'tau_exp', 'Ts'):
            lower[i] = 1e-9
        elif name == 'q':
            lower[i], upper[i] = 1e-12, 1.0 - 1e-12

    def build(x: np.ndarray) -> QuenchProfile:
        return replace(init, **{name: float(x[i] * scales[name]) for i, name in enumerate(fields)})

    def residuals(x: np.ndarray) -> np.ndarray:
        return (build(x).get_value(t) - values) / scales['intensity0']

    result = least_squares(residuals, x0, jac='3-point', diff_step=JACOBIAN_STEP, bounds=(lower, upper),
                           method='trf', x_scale=1.0, ftol=1e-12, xtol=1e-12, gtol=1e-12, max_nfev=max_nfev)
    if result.status <= 0:
        raise FitError(f"Profile fit did not converge: {result.message}")

    singular = np.linalg.svd(result.jac, compute_uv=False)
    if singular[-1] <= RANK_TOL * singular[0]:
        raise FitError("Profile fit Jacobian is rank deficient; the trace does not constrain every parameter")

    dof = max(t.size - x0.size, 1)
    residual_var = 2.0 * result.cost / dof
    cov = np.linalg.inv(result.jac.T @ result.jac) * residual_var
    errors = {name: float(np.sqrt(max(cov[i, i], 0.0)) * scales[name]) for i, name in enumerate(fields)}
    profile = build(result.x)
    rms = float(np.sqrt(2.0 * result.cost / t.size)) * scales['intensity0']

    if logger:
        logger.debug(f"Profile fit: tau_exp={profile.tau_exp:.4e} s ± {errors['tau_exp']:.2e} s "
                     f"after {result.nfev} evaluations")
    return ProfileFit(profile=profile, standard_errors=errors, rms_residual=rms, n_samples=int(t.size))
