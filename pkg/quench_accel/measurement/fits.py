# measurement/fits.py

"""
Fits applied to synthetic or measured readouts.

- fit_folded_normal: two mirrored Gaussians of equal amplitude fitted to the
  histogram of |z| shots, giving the mean μ and width σ of z.
- fit_rectified_sinusoid: μ(T) = |A sin(ωT + φ) + μ_off| fitted to a trace.
- tilt_sweep_slope: weighted straight line through values measured at
  several table tilts.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.optimize import OptimizeWarning, curve_fit

from quench_accel.defs import Trace, trace_to_arrays
from quench_accel.exceptions import FitError, InvalidParamsError
from quench_accel.measurement.shots import ShotSet

MIN_SHOTS = 50
MIN_BINS = 8
MIN_TRACE_POINTS = 20
MIN_PERIODS = 2.0
PHASE_STARTS = 8
# half-width around π/2 in which the fold branch cannot be decided (rad)
AMBIGUITY_TOL = 0.1

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FoldedFit:
    """
    Folded-normal histogram fit.

    Attributes:
        amplitude: A (counts per bin).
        mu: Mean of z, reported non-negative (m).
        sigma: Standard deviation of z (m).
        se_amplitude, se_mu, se_sigma: One-sigma standard errors (inf when not identifiable).
        bins: Number of histogram bins used.
    """
    amplitude: float
    mu: float
    sigma: float
    se_amplitude: float
    se_mu: float
    se_sigma: float
    bins: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParamsError(f"sigma > 0 violated: sigma={self.sigma}")
        if self.mu < 0:
            raise InvalidParamsError(f"mu >= 0 violated: mu={self.mu}")

    def to_report(self) -> Dict[str, Any]:
        return {
            'amplitude_counts': self.amplitude, 'mu_m': self.mu, 'sigma_m': self.sigma,
            'se_amplitude_counts': self.se_amplitude, 'se_mu_m': self.se_mu, 'se_sigma_m': self.se_sigma,
            'bins': self.bins,
        }


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma: float
    se_mu: float
    se_sigma: float


@dataclass(frozen=True)
class SinusoidFit:
    """
    Rectified-sinusoid fit μ(T) = |A sin(ωT + φ) + μ_off|.

    Attributes:
        A: Amplitude, ≥ 0 (m).
        omega: Angular frequency, > 0 (rad/s).
        phi: Phase in [0, 2π) (rad).
        mu_off: Offset (m); ≥ 0 unless a reference phase selected the other branch.
        se_A, se_omega, se_phi, se_mu_off: One-sigma standard errors.
    """
    A: float
    omega: float
    phi: float
    mu_off: float
    se_A: float
    se_omega: float
    se_phi: float
    se_mu_off: float

    def __post_init__(self):
        if self.A < 0 or not self.omega > 0:
            raise InvalidParamsError(f"A >= 0 and omega > 0 violated: A={self.A}, omega={self.omega}")

    def evaluate(self, t) -> np.ndarray:
        return rectified_sinusoid(np.asarray(t, dtype=float), self.A, self.omega, self.phi, self.mu_off)

    def to_report(self) -> Dict[str, Any]:
        return {
            'A_m': self.A, 'omega_radps': self.omega, 'phi_rad': self.phi, 'mu_off_m': self.mu_off,
            'se_A_m': self.se_A, 'se_omega_radps': self.se_omega, 'se_phi_rad': self.se_phi,
            'se_mu_off_m': self.se_mu_off,
        }


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    se_slope: float
    se_intercept: float


def folded_normal_counts(z: np.ndarray, amplitude: float, mu: float, sigma: float) -> np.ndarray:
    """A[exp(−(z−μ)²/2σ²) + exp(−(z+μ)²/2σ²)]."""
    return amplitude * (np.exp(-0.5 * ((z - mu) / sigma) ** 2) + np.exp(-0.5 * ((z + mu) / sigma) ** 2))


def rectified_sinusoid(t: np.ndarray, A: float, omega: float, phi: float, mu_off: float) -> np.ndarray:
    return np.abs(A * np.sin(omega * t + phi) + mu_off)


def histogram_edges(samples: np.ndarray, bins: Optional[int] = None) -> np.ndarray:
    """
    Bin edges on [0, max(samples)]: Freedman–Diaconis by default, never fewer than 8 bins.
    """
    upper = float(np.max(samples))
    if upper <= 0:
        raise FitError("Degenerate histogram: all samples are zero")
    if bins is None:
        edges = np.histogram_bin_edges(samples, bins='fd', range=(0.0, upper))
        if edges.size - 1 >= MIN_BINS:
            return edges
        bins = MIN_BINS
    return np.linspace(0.0, upper, bins + 1)


def _shot_samples(shots: Union[ShotSet, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(shots, ShotSet):
        return shots.samples
    return np.asarray(shots, dtype=float).ravel()


def fit_folded_normal(shots: Union[ShotSet, Sequence[float], np.ndarray], bins: Optional[int] = None,
                      logger: Optional[logging.Logger] = None) -> FoldedFit:
    """
    Fits the folded-normal model to the histogram counts of |z| shots.

    The histogram spans [0, max]; the model is evaluated at bin centres and
    fitted by nonlinear least squares starting from the sample mean and
    standard deviation of |z|. Each bin is weighted by its Poisson error
    √max(count, 1), so the standard errors are absolute and shrink as 1/√n. The model is symmetric under μ → −μ, so μ is
    reported as |μ|. At μ = 0 the model depends on μ only at second order
    and its standard error is infinite.

    Args:
        shots: ShotSet or array of |z| values (m).
        bins: Number of bins (≥ 8); Freedman–Diaconis when None.
        logger: Optional logger.

    Raises:
        InvalidParamsError: Fewer than 50 samples or fewer than 8 bins requested.
        FitError: Degenerate histogram or non-convergence.
    """
    samples = _shot_samples(shots)
    if samples.size < MIN_SHOTS:
        raise InvalidParamsError(f"fit_folded_normal needs at least {MIN_SHOTS} samples, got {samples.size}")
    if bins is not None and bins < MIN_BINS:
        raise InvalidParamsError(f"bins >= {MIN_BINS} violated: bins={bins}")
    edges = histogram_edges(samples, bins)
    counts, _ = np.histogram(samples, bins=edges)
    if np.count_nonzero(counts) < 2:
        raise FitError("Degenerate histogram: all samples fall in one bin")
    centres = 0.5 * (edges[:-1] + edges[1:])

    scale = float(np.std(samples)) or float(np.mean(samples))
    p0 = [float(np.max(counts)), float(np.mean(samples)) / scale, float(np.std(samples)) / scale]
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', OptimizeWarning)
        try:
            popt, pcov = curve_fit(folded_normal_counts, centres / scale, counts.astype(float), p0=p0,
                                   sigma=np.sqrt(np.maximum(counts, 1)), absolute_sigma=True, maxfev=10000)
        except RuntimeError as e:
            raise FitError(f"Folded-normal fit did not converge: {e}") from e
    errors = np.sqrt(np.abs(np.diag(pcov)))
    if not np.all(np.isfinite(errors)):
        errors = np.where(np.isfinite(errors), errors, np.inf)
        if logger:
            logger.warning("Folded-normal fit covariance is not finite; reporting infinite standard errors")
    amplitude, mu, sigma = popt
    return FoldedFit(
        amplitude=float(amplitude),
        mu=abs(float(mu)) * scale,
        sigma=abs(float(sigma)) * scale,
        se_amplitude=float(errors[0]),
        se_mu=float(errors[1]) * scale,
        se_sigma=float(errors[2]) * scale,
        bins=int(counts.size),
    )


def fit_gaussian(samples: Union[Sequence[float], np.ndarray]) -> GaussianFit:
    """Plain maximum-likelihood Gaussian fit of samples, ignoring folding."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise InvalidParamsError("fit_gaussian needs at least two samples")
    mu, sigma = stats.norm.fit(samples)
    n = samples.size
    return GaussianFit(mu=float(mu), sigma=float(sigma), se_mu=float(sigma / math.sqrt(n)),
                       se_sigma=float(sigma / math.sqrt(2.0 * n)))


def _circular_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _canonical(A: float, omega: float, phi: float, mu_off: float) -> Tuple[float, float, float, float]:
    if omega < 0:
        omega, phi = -omega, math.pi - phi
    if A < 0:
        A, phi = -A, phi + math.pi
    if mu_off < 0:
        mu_off, phi = -mu_off, phi + math.pi
    return A, omega, phi % TWO_PI, mu_off


def fit_rectified_sinusoid(trace: Trace, omega_init: float, phase_ref: Optional[float] = None,
                           logger: Optional[logging.Logger] = None) -> SinusoidFit:
    """
    Fits μ(T) = |A sin(ωT + φ) + μ_off| to a trace.

    The fit runs on times scaled by omega_init and values scaled by their
    maximum, restarted from 8 evenly spaced initial phases; the start with
    the smallest residual wins. The model is unchanged under
    (A, φ, μ_off) → (A, φ + π, −μ_off); the result is canonicalised to
    A ≥ 0, ω > 0, φ ∈ [0, 2π) and μ_off ≥ 0. With `phase_ref` the branch
    whose φ lies within π/2 of the reference is returned instead, so that the
    sign of μ_off can be followed across a tilt sweep.

    Args:
        trace: (t, μ) pairs (s, m).
        omega_init: Initial guess of ω (rad/s).
        phase_ref: Optional reference phase selecting the fold branch (rad).
        logger: Optional logger.

    Raises:
        InvalidParamsError: Fewer than 20 points or a span shorter than two periods.
        FitError: Non-convergence, or a branch that cannot be decided from phase_ref.
    """
    t, y = trace_to_arrays(trace)
    if t.size < MIN_TRACE_POINTS:
        raise InvalidParamsError(f"fit_rectified_sinusoid needs at least {MIN_TRACE_POINTS} points, got {t.size}")
    if not omega_init > 0:
        raise InvalidParamsError(f"omega_init > 0 violated: omega_init={omega_init}")
    if (t.max() - t.min()) * omega_init < MIN_PERIODS * TWO_PI:
        raise InvalidParamsError("Trace must span at least two periods of omega_init")

    t_ref = float(t[0])
    x = (t - t_ref) * omega_init
    y_scale = float(np.max(np.abs(y))) or 1.0
    ys = y / y_scale
    amp0 = 0.5 * float(np.max(ys) - np.min(ys)) or 0.5
    off0 = float(np.mean(ys))

    best = None
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', OptimizeWarning)
        for k in range(PHASE_STARTS):
            p0 = [amp0, 1.0, k * TWO_PI / PHASE_STARTS, off0]
            try:
                popt, pcov = curve_fit(rectified_sinusoid, x, ys, p0=p0, maxfev=20000)
            except RuntimeError:
                continue
            sse = float(np.sum((rectified_sinusoid(x, *popt) - ys) ** 2))
            if best is None or sse < best[0]:
                best = (sse, popt, pcov)
    if best is None:
        raise FitError("Rectified-sinusoid fit did not converge from any initial phase")
    _, popt, pcov = best

    A_s, w_s, phi_s, off_s = popt
    omega = w_s * omega_init
    # back to physical units: φ = φ' − ω·t_ref
    jac = np.array([
        [y_scale, 0.0, 0.0, 0.0],
        [0.0, omega_init, 0.0, 0.0],
        [0.0, -omega_init * t_ref, 1.0, 0.0],
        [0.0, 0.0, 0.0, y_scale],
    ])
    cov = jac @ pcov @ jac.T
    errors = np.sqrt(np.abs(np.diag(cov)))
    A, omega, phi, mu_off = _canonical(A_s * y_scale, omega, phi_s - omega * t_ref, off_s * y_scale)

    if phase_ref is not None:
        d_this = _circular_distance(phi, phase_ref)
        d_other = _circular_distance(phi + math.pi, phase_ref)
        if abs(d_this - math.pi / 2.0) < AMBIGUITY_TOL and abs(d_other - math.pi / 2.0) < AMBIGUITY_TOL:
            raise FitError(f"Ambiguous fold: fitted phase {phi:.3f} rad is orthogonal to reference {phase_ref:.3f} rad")
        if d_other < d_this:
            phi, mu_off = (phi + math.pi) % TWO_PI, -mu_off

    if logger:
        logger.debug(f"Rectified sinusoid: A={A:.3e} m, omega={omega:.4e} rad/s, phi={phi:.3f}, mu_off={mu_off:.3e} m")
    return SinusoidFit(A=A, omega=omega, phi=phi, mu_off=mu_off,
                       se_A=float(errors[0]), se_omega=float(errors[1]),
                       se_phi=float(errors[2]), se_mu_off=float(errors[3]))


def tilt_sweep_slope(fits: Sequence[Tuple[float, float, float]]) -> LineFit:
    """
    Weighted straight-line fit of values measured at several tilts.

    Args:
        fits: (tilt, value, se) triples (rad, m, m).

    Returns:
        LineFit: slope (m/rad), intercept (m) and their standard errors from the
        weighted least-squares covariance with weights 1/se².

    Raises:
        InvalidParamsError: Fewer than 3 distinct tilts or a non-positive standard error.
    """
    data = np.asarray(fits, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise InvalidParamsError("tilt_sweep_slope expects (tilt, value, se) triples")
    tilts, values, se = data.T
    if np.unique(tilts).size < 3:
        raise InvalidParamsError("tilt_sweep_slope needs at least 3 distinct tilts")
    if np.any(se <= 0):
        raise InvalidParamsError("tilt_sweep_slope standard errors must be positive")
    coef, cov = np.polyfit(tilts, values, 1, w=1.0 / se, cov='unscaled')
    return LineFit(slope=float(coef[0]), intercept=float(coef[1]),
                   se_slope=float(math.sqrt(cov[0, 0])), se_intercept=float(math.sqrt(cov[1, 1])))
