# metrology/qfi.py

"""
Quantum Fisher information for the acceleration a after a sudden quench.

Only the first moments depend on a, so for the Gaussian state the QFI is
F = (∂ₐμ)ᵀ Σ⁻¹ (∂ₐμ) with μ = (⟨x⟩, ⟨p⟩) and Σ the covariance. With the
closed-form sudden-quench solutions this reduces to

    F(t) = 2m/(ħκω₀³) · [1 + r(r − 1)(1 − cos ω₁t)²],   r = ω₀²/ω₁²,

which peaks at the half period t = π/ω₁ where the bracket is (2r − 1)².
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from quench_accel.dynamics.moment_dynamics import sudden_quench_covariance
from quench_accel.exceptions import InvalidParamsError
from quench_accel.model.params import PhysicalParams, derive

# relative slack before S/√F_Q > 1 is flagged
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class QfiResult:
    """
    Attributes:
        value: F_Q (s⁴/m²).
        time: Evaluation time after the quench (s).
        kappa: κ = 2n̄ + 1 used.
        r: ω₀²/ω₁² used.
    """
    value: float
    time: float
    kappa: float
    r: float

    def __post_init__(self):
        if not self.value >= 0:
            raise InvalidParamsError(f"value >= 0 violated: value={self.value}")

    @property
    def sqrt_value(self) -> float:
        """√F_Q, the bound on the single-shot sensitivity (s²/m)."""
        return math.sqrt(self.value)

    def to_report(self) -> Dict[str, float]:
        return {'F_Q_s4pm2': self.value, 'sqrt_F_Q_s2pm': self.sqrt_value, 'time_s': self.time,
                'kappa': self.kappa, 'r': self.r}


@dataclass(frozen=True)
class BoundRatio:
    """S/√F_Q and whether it exceeds 1 beyond numerical slack."""
    ratio: float
    violated: bool


def _prefactor(mass: float, kappa: float, omega0: float, hbar: float) -> float:
    return 2.0 * mass / (hbar * kappa * omega0 ** 3)


def mean_derivatives(params: PhysicalParams, t: float):
    """
    ∂⟨x⟩/∂a and ∂⟨p⟩/∂a after a sudden quench at t = 0.

    Returns:
        (f_x, f_p) in s² and kg·s.
    """
    w0, w1 = params.omega0, params.omega1
    phase = w1 * t
    f_x = 1.0 / w1 ** 2 + (1.0 / w0 ** 2 - 1.0 / w1 ** 2) * np.cos(phase)
    f_p = params.mass * w1 * (1.0 / w1 ** 2 - 1.0 / w0 ** 2) * np.sin(phase)
    return f_x, f_p


def qfi_sudden(params: PhysicalParams, t: float) -> QfiResult:
    """QFI at time t after a sudden quench, from the compact closed form."""
    if t < 0:
        raise InvalidParamsError(f"t >= 0 violated: t={t}")
    scalars = derive(params)
    r = scalars.freq_ratio_sq
    bracket = 1.0 + r * (r - 1.0) * (1.0 - math.cos(params.omega1 * t)) ** 2
    value = _prefactor(params.mass, scalars.kappa, params.omega0, params.hbar) * bracket
    return QfiResult(value=value, time=t, kappa=scalars.kappa, r=r)


def qfi_gaussian(params: PhysicalParams, t: float) -> QfiResult:
    """QFI at time t from the general Gaussian formula (∂ₐμ)ᵀ Σ⁻¹ (∂ₐμ)."""
    if t < 0:
        raise InvalidParamsError(f"t >= 0 violated: t={t}")
    scalars = derive(params)
    f_x, f_p = mean_derivatives(params, t)
    var_x, var_p, cov_xp = (float(v) for v in sudden_quench_covariance(params, t))
    grad = np.array([f_x, f_p], dtype=float)
    sigma = np.array([[var_x, cov_xp], [cov_xp, var_p]])
    value = float(grad @ np.linalg.solve(sigma, grad))
    return QfiResult(value=value, time=t, kappa=scalars.kappa, r=scalars.freq_ratio_sq)


def half_period_qfi_value(mass: float, kappa: float, omega0: float, omega1: float, hbar: float) -> float:
    """
    2m/(ħκω₀³)·[1 + 4r(r − 1)] for raw inputs.

    Accepts ω₁ = ω₀ (r = 1, no enhancement), which PhysicalParams rejects.
    """
    r = (omega0 / omega1) ** 2
    return _prefactor(mass, kappa, omega0, hbar) * (1.0 + 4.0 * r * (r - 1.0))


def qfi_half_period(params: PhysicalParams) -> QfiResult:
    """QFI at the half period T₁/2 = π/ω₁, where it is maximal."""
    scalars = derive(params)
    value = half_period_qfi_value(params.mass, scalars.kappa, params.omega0, params.omega1, params.hbar)
    return QfiResult(value=value, time=math.pi / params.omega1, kappa=scalars.kappa, r=scalars.freq_ratio_sq)


def position_fisher_information(params: PhysicalParams, t: float) -> float:
    """
    Classical Fisher information f_x²/V_xx of a position readout after a sudden
    quench. Equals F_Q at odd multiples of π/ω₁.
    """
    f_x, _ = mean_derivatives(params, t)
    var_x, _, _ = sudden_quench_covariance(params, t)
    return float(f_x ** 2 / var_x)


def bound_check(sensitivity: float, qfi_value: float, tol: float = BOUND_TOL) -> BoundRatio:
    """
    Ratio S/√F_Q of a single-shot sensitivity to the quantum bound.

    Raises:
        InvalidParamsError: If F_Q is not positive.
    """
    if not qfi_value > 0:
        raise InvalidParamsError(f"F_Q > 0 violated: F_Q={qfi_value}")
    ratio = abs(sensitivity) / math.sqrt(qfi_value)
    return BoundRatio(ratio=ratio, violated=ratio > 1.0 + tol)
