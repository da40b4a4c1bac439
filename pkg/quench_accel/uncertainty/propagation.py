# uncertainty/propagation.py

"""
First-order propagation of uncorrelated 1-σ uncertainties.

Every quantity with an error bar travels as a `Measured` value. The
functions here combine relative errors in quadrature and never model
correlations between inputs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from quench_accel.defs import HBAR
from quench_accel.exceptions import InvalidParamsError
from quench_accel.metrology.qfi import half_period_qfi_value
from quench_accel.model.params import PhysicalParams, derive

# relative input uncertainty above which first-order propagation is flagged
LARGE_RELATIVE_ERROR = 0.2


@dataclass(frozen=True)
class Measured:
    """
    A value with its 1-σ standard error, both in the same unit.

    Attributes:
        value: Central value.
        sigma: Standard error, non-negative.
    """
    value: float
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'value', float(self.value))
        object.__setattr__(self, 'sigma', float(self.sigma))
        if not self.sigma >= 0:
            raise InvalidParamsError(f"sigma >= 0 violated: sigma={self.sigma}")

    @property
    def relative(self) -> float:
        """σ/|value|; infinite for a zero value with non-zero σ."""
        if self.value == 0:
            return 0.0 if self.sigma == 0 else math.inf
        return self.sigma / abs(self.value)

    def scaled(self, factor: float) -> 'Measured':
        return Measured(self.value * factor, self.sigma * abs(factor))

    def to_report(self, name: str) -> dict:
        return {name: self.value, f'{name}_sigma': self.sigma}


def qfi_log_coefficients(r: float) -> Tuple[float, float]:
    """
    ∂ln F_Q/∂ln ω₀ and ∂ln F_Q/∂ln ω₁ of the half-period QFI for r = ω₀²/ω₁².

    With B = 1 + 4r(r − 1) the coefficients are −3 + 8r(2r − 1)/B and
    −8r(2r − 1)/B.
    """
    enhancement = 8.0 * r * (2.0 * r - 1.0) / (1.0 + 4.0 * r * (r - 1.0))
    return -3.0 + enhancement, -enhancement


def qfi_log_sensitivities(params: PhysicalParams) -> Tuple[float, float]:
    """Logarithmic sensitivities of F_Q(π/ω₁) to ω₀ and ω₁ at `params`."""
    return qfi_log_coefficients(derive(params).freq_ratio_sq)


def _warn_large(logger: Optional[logging.Logger], **inputs: Measured) -> None:
    if not logger:
        return
    for name, measured in inputs.items():
        if measured.relative > LARGE_RELATIVE_ERROR:
            logger.warning(f"Relative uncertainty of {name} is {measured.relative:.1%}; "
                           "first-order propagation may be inaccurate")


def qfi_uncertainty(m: Measured, nbar: Measured, w0: Measured, w1: Measured, hbar: float = HBAR,
                    logger: Optional[logging.Logger] = None) -> Measured:
    """
    Half-period QFI with its propagated uncertainty.

    (δF/F)² = (δm/m)² + (δκ/κ)² + c₀²(δω₀/ω₀)² + c₁²(δω₁/ω₁)², where
    δκ/κ = 2δn̄/(2n̄ + 1) and c₀, c₁ come from `qfi_log_coefficients`.

    Args:
        m: Mass (kg).
        nbar: Mean phonon number.
        w0: Pre-quench angular frequency (rad/s).
        w1: Post-quench angular frequency (rad/s).
        hbar: Reduced Planck constant (J·s).
        logger: Receives a warning for inputs above 20% relative uncertainty.

    Returns:
        Measured: F_Q in s⁴/m².
    """
    if m.value <= 0 or w0.value <= 0 or w1.value <= 0 or nbar.value < 0:
        raise InvalidParamsError("qfi_uncertainty needs m, ω₀, ω₁ > 0 and n̄ >= 0")
    _warn_large(logger, m=m, nbar=nbar, w0=w0, w1=w1)
    kappa = 2.0 * nbar.value + 1.0
    value = half_period_qfi_value(m.value, kappa, w0.value, w1.value, hbar)
    c0, c1 = qfi_log_coefficients((w0.value / w1.value) ** 2)
    relative = math.sqrt(
        m.relative ** 2
        + (2.0 * nbar.sigma / kappa) ** 2
        + (c0 * w0.relative) ** 2
        + (c1 * w1.relative) ** 2
    )
    return Measured(value, value * relative)


def sensitivity_uncertainty(dmu_da: Measured, sigma_width: Measured) -> Measured:
    """
    S = (dμ/da)/σ with δS/S = √((δ(dμ/da)/(dμ/da))² + (δσ/σ)²).

    Raises:
        InvalidParamsError: If either value is not positive.
    """
    if not sigma_width.value > 0:
        raise InvalidParamsError(f"sigma_width > 0 violated: sigma_width={sigma_width.value}")
    if not dmu_da.value > 0:
        raise InvalidParamsError(f"dmu_da > 0 violated: dmu_da={dmu_da.value}")
    value = dmu_da.value / sigma_width.value
    return Measured(value, value * math.hypot(dmu_da.relative, sigma_width.relative))


def weighted_mean(values: Sequence[Measured]) -> Measured:
    """
    Inverse-variance weighted mean: x̄ = Σ(xᵢ/δᵢ²)/Σ(1/δᵢ²), δx̄ = (Σ 1/δᵢ²)^(−1/2).

    Raises:
        InvalidParamsError: Empty input or an entry with zero uncertainty.
    """
    if len(values) == 0:
        raise InvalidParamsError("weighted_mean needs at least one entry")
    sigmas = np.array([v.sigma for v in values])
    if np.any(sigmas <= 0):
        raise InvalidParamsError("weighted_mean entries must have sigma > 0")
    weights = 1.0 / sigmas ** 2
    centre = float(np.sum(weights * np.array([v.value for v in values])) / np.sum(weights))
    return Measured(centre, float(np.sqrt(1.0 / np.sum(weights))))


@dataclass(frozen=True)
class SmallAngleBound:
    """
    Attributes:
        bound: θ²/6, the Taylor-remainder bound on |sin θ − θ|/|θ|.
        exact: |sin θ − θ|/|θ|.
    """
    bound: float
    exact: float


def small_angle_bound(theta: float) -> SmallAngleBound:
    """
    Relative error of sin θ ≈ θ and its Taylor-remainder bound.

    Raises:
        InvalidParamsError: If θ is zero.
    """
    if theta == 0:
        raise InvalidParamsError("theta != 0 violated")
    return SmallAngleBound(bound=theta ** 2 / 6.0, exact=abs(math.sin(theta) - theta) / abs(theta))


def frequency_stats(samples: Sequence[float]) -> Measured:
    """Sample mean with the (n − 1)-normalised standard deviation as its uncertainty."""
    data = np.asarray(samples, dtype=float)
    if data.size < 2:
        raise InvalidParamsError(f"frequency_stats needs at least 2 samples, got {data.size}")
    return Measured(float(np.mean(data)), float(np.std(data, ddof=1)))


def apply_calibration(measured: Measured, calibration: Measured) -> Measured:
    """
    Applies a multiplicative calibration factor c(δc): the statistical and
    systematic contributions add in quadrature, δ = √((c·δx)² + (x·δc)²).
    """
    value = measured.value * calibration.value
    return Measured(value, math.hypot(calibration.value * measured.sigma, measured.value * calibration.sigma))


def slope_to_dmu_da(slope: Measured, g: float, tilt: Optional[float] = None, theta0: float = 0.0) -> Measured:
    """
    Converts a tilt slope dμ/dθ (m/rad) to dμ/da (s²).

    dμ/da = (dμ/dθ)/(g·cos(θ + θ₀)), or (dμ/dθ)/g in the small-angle form
    used when no tilt is given.

    Raises:
        InvalidParamsError: If the conversion factor is not finite.
    """
    denominator = g if tilt is None else g * math.cos(tilt + theta0)
    if denominator == 0:
        raise InvalidParamsError("g·cos(θ + θ₀) != 0 violated")
    return slope.scaled(1.0 / denominator)
