# dynamics/moment_dynamics.py

"""
Gaussian moment dynamics of the levitated particle through a quench.

The quantum Langevin model with a harmonic trap, a static acceleration a,
the intensity-dependent trap shift z_k(t) and background-gas damping γ
closes on the first and second moments:

    ∂t⟨z⟩ = ⟨p⟩/m
    ∂t⟨p⟩ = −mω²(t)[⟨z⟩ − z_k(t)] + ma − γ⟨p⟩
    ∂t V_z = 2C_zp/m
    ∂t V_p = −2mω²(t)C_zp − 2γV_p + 2mk_BT₀γ
    ∂t C_zp = −mω²(t)V_z + V_p/m − γC_zp

These are integrated with fixed-step classic RK4. The integrator works on
a (5, B) state array so that a batch of accelerations and heating rates
sharing one intensity profile advances in a single pass; the profile is
evaluated once on the half-step grid before stepping.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from quench_accel.dynamics.intensity_profiles import IntensityProfile, omega_sq_of_t, trap_shift
from quench_accel.exceptions import InvalidParamsError, NumericalError
from quench_accel.model.params import PhysicalParams, derive
from quench_accel.model.state import GaussianState, Trajectory

# default step is this many steps per pre-quench period
STEPS_PER_PERIOD = 200
# coarsest step accepted, in steps per pre-quench period
MIN_STEPS_PER_PERIOD = 50
# output grid used by the analysis layers (s)
DEFAULT_DT_OUT = 0.5e-6

ArrayLike = Union[float, Sequence[float], np.ndarray]


def default_dt(params: PhysicalParams) -> float:
    return 2.0 * math.pi / (STEPS_PER_PERIOD * params.omega0)


def max_dt(params: PhysicalParams) -> float:
    return 2.0 * math.pi / (MIN_STEPS_PER_PERIOD * params.omega0)


def initial_state(params: PhysicalParams, a: float) -> GaussianState:
    """
    Thermal state of the pre-quench trap displaced by the acceleration a.

    Returns (a/ω₀², 0, ħ(n̄+½)/(mω₀), ħmω₀(n̄+½), 0).
    """
    half_kappa = params.nbar + 0.5
    return GaussianState(
        mean_z=a / params.omega0 ** 2,
        mean_p=0.0,
        var_z=params.hbar * half_kappa / (params.mass * params.omega0),
        var_p=params.hbar * params.mass * params.omega0 * half_kappa,
        cov_zp=0.0,
    )


def _moment_rhs(y: np.ndarray, w2: float, zk: float, accel: np.ndarray, gamma: np.ndarray,
                mass: float, diffusion: np.ndarray) -> np.ndarray:
    mean_z, mean_p, var_z, var_p, cov_zp = y
    return np.stack((
        mean_p / mass,
        -mass * w2 * (mean_z - zk) + mass * accel - gamma * mean_p,
        2.0 * cov_zp / mass,
        -2.0 * mass * w2 * cov_zp - 2.0 * gamma * var_p + diffusion,
        -mass * w2 * var_z + var_p / mass - gamma * cov_zp,
    ))


def _time_grid(t_start: float, t_end: float, dt: float, dt_out: Optional[float]) -> Tuple[float, int, int]:
    """
    Returns the effective step, the number of output intervals and the
    number of steps per output interval.

    The step is shortened when needed so that every output time falls on
    the step grid.
    """
    span = t_end - t_start
    if dt_out is None:
        n_steps = max(1, int(math.ceil(span / dt - 1e-9)))
        return span / n_steps, n_steps, 1
    if dt_out <= 0:
        raise InvalidParamsError(f"dt_out > 0 violated: dt_out={dt_out}")
    n_out = int(math.floor(span / dt_out + 1e-9))
    if n_out < 1:
        raise InvalidParamsError(f"t_end - t_start must cover at least one output interval dt_out={dt_out}")
    stride = max(1, int(math.ceil(dt_out / dt - 1e-9)))
    return dt_out / stride, n_out, stride


def integrate_batch(
        params: PhysicalParams,
        profile: IntensityProfile,
        accelerations: ArrayLike,
        t_end: float,
        heating_rates: Optional[ArrayLike] = None,
        dt: Optional[float] = None,
        dt_out: Optional[float] = None,
        t_start: float = 0.0,
        logger: Optional[logging.Logger] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrates the moment equations for a batch of runs sharing one profile.

    `accelerations` and `heating_rates` are broadcast against each other; each
    entry pair is an independent run starting from `initial_state` at
    `t_start`.

    Args:
        params: Physical parameters; `heating_rate` is used when `heating_rates` is None.
        profile: Intensity profile defining ω(t) and z_k(t).
        accelerations: Static acceleration(s) a (m/s²).
        t_end: End time (s).
        heating_rates: Heating rate(s) Γ_heat (K/s).
        dt: RK4 step (s), default 2π/(200ω₀).
        dt_out: Output spacing (s); every step is returned when None.
        t_start: Start time (s).
        logger: Optional logger for progress messages.

    Returns:
        (times, moments): output times with shape (N,) and moments with shape (5, B, N).

    Raises:
        NumericalError: If dt exceeds the resolution guard or a state becomes non-finite.
        InvalidParamsError: If the time span is empty.
    """
    if not t_end > t_start:
        raise InvalidParamsError(f"t_end > t_start violated: t_end={t_end}, t_start={t_start}")
    dt = default_dt(params) if dt is None else dt
    if not 0 < dt <= max_dt(params) * (1.0 + 1e-12):
        raise NumericalError(
            f"Step dt={dt:.3e} s violates the resolution guard dt <= 2π/({MIN_STEPS_PER_PERIOD}·ω₀) = {max_dt(params):.3e} s"
        )
    heating = params.heating_rate if heating_rates is None else heating_rates
    accel, heating = np.broadcast_arrays(np.atleast_1d(np.asarray(accelerations, dtype=float)),
                                         np.atleast_1d(np.asarray(heating, dtype=float)))
    if np.any(heating < 0):
        raise InvalidParamsError("heating_rate >= 0 violated in batch")
    accel = accel.astype(float)
    gamma = heating / params.gas_temperature
    diffusion = 2.0 * params.mass * params.boltzmann * params.gas_temperature * gamma

    step, n_out, stride = _time_grid(t_start, t_end, dt, dt_out)
    n_steps = n_out * stride
    half_grid = t_start + 0.5 * step * np.arange(2 * n_steps + 1)
    w2_grid = omega_sq_of_t(params, profile, half_grid)
    zk_grid = np.asarray(trap_shift(params, profile, half_grid), dtype=float) * np.ones_like(half_grid)

    y = np.stack([np.full(accel.shape, v) for v in initial_state(params, 0.0).to_numpy()])
    y[0] = accel / params.omega0 ** 2
    out = np.empty((5, accel.size, n_out + 1))
    out[:, :, 0] = y
    mass = params.mass

    if logger:
        logger.debug(f"RK4: {n_steps} steps of {step:.3e} s, batch of {accel.size}, {n_out + 1} output samples")

    h = step
    for n in range(n_steps):
        j = 2 * n
        w2_a, w2_b, w2_c = w2_grid[j], w2_grid[j + 1], w2_grid[j + 2]
        zk_a, zk_b, zk_c = zk_grid[j], zk_grid[j + 1], zk_grid[j + 2]
        k1 = _moment_rhs(y, w2_a, zk_a, accel, gamma, mass, diffusion)
        k2 = _moment_rhs(y + 0.5 * h * k1, w2_b, zk_b, accel, gamma, mass, diffusion)
        k3 = _moment_rhs(y + 0.5 * h * k2, w2_b, zk_b, accel, gamma, mass, diffusion)
        k4 = _moment_rhs(y + h * k3, w2_c, zk_c, accel, gamma, mass, diffusion)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % stride == 0:
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"Moment integration became non-finite at t={t_start + (n + 1) * h:.6e} s")
            out[:, :, (n + 1) // stride] = y

    times = t_start + step * stride * np.arange(n_out + 1)
    return times, out


def integrate(
        params: PhysicalParams,
        profile: IntensityProfile,
        a: float,
        t_end: float,
        dt: Optional[float] = None,
        dt_out: Optional[float] = None,
        heating: Optional[float] = None,
        t_start: float = 0.0,
        logger: Optional[logging.Logger] = None,
) -> Trajectory:
    """
    Integrates a single run and returns it as a validated Trajectory.

    See `integrate_batch` for the arguments.
    """
    times, moments = integrate_batch(params, profile, a, t_end, heating_rates=heating, dt=dt,
                                     dt_out=dt_out, t_start=t_start, logger=logger)
    return Trajectory(times, moments[:, 0, :], hbar=params.hbar)


def integrate_many(
        params: PhysicalParams,
        profile: IntensityProfile,
        accelerations: ArrayLike,
        t_end: float,
        heating_rates: Optional[ArrayLike] = None,
        dt: Optional[float] = None,
        dt_out: Optional[float] = None,
        logger: Optional[logging.Logger] = None,
) -> List[Trajectory]:
    """Batch integration returned as one Trajectory per run."""
    times, moments = integrate_batch(params, profile, accelerations, t_end, heating_rates=heating_rates,
                                     dt=dt, dt_out=dt_out, logger=logger)
    return [Trajectory(times, moments[:, b, :], hbar=params.hbar) for b in range(moments.shape[1])]


def sudden_quench_means(params: PhysicalParams, a: float, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form first moments after an instantaneous quench ω₀ → ω₁ at t = 0.

    The particle starts at rest at a/ω₀² and oscillates about the new
    equilibrium a/ω₁² + χ(1 − q), q = ω₁²/ω₀²:

        ⟨z(t)⟩ = z_eq + (a/ω₀² − z_eq)cos(ω₁t)
        ⟨p(t)⟩ = −mω₁(a/ω₀² − z_eq)sin(ω₁t)

    Damping is neglected.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParamsError("t >= 0 violated")
    w1 = params.omega1
    q = (params.omega1 / params.omega0) ** 2
    z_eq = a / w1 ** 2 + params.chi * (1.0 - q)
    offset = a / params.omega0 ** 2 - z_eq
    mean_z = z_eq + offset * np.cos(w1 * t)
    mean_p = -params.mass * w1 * offset * np.sin(w1 * t)
    return mean_z, mean_p


def sudden_quench_covariance(params: PhysicalParams, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Closed-form covariance after an instantaneous quench from the thermal
    state of the ω₀ trap, with κ = 2n̄ + 1:

        V_xx = (κħ/2mω₀)[cos²ω₁t + r sin²ω₁t]
        V_pp = (κħmω₀/2)[cos²ω₁t + r⁻¹ sin²ω₁t]
        V_xp = (κħ/2)(ω₀/ω₁ − ω₁/ω₀) sin ω₁t cos ω₁t

    The determinant stays (κħ/2)².
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParamsError("t >= 0 violated")
    scalars = derive(params)
    kappa, r = scalars.kappa, scalars.freq_ratio_sq
    m, w0, w1, hbar = params.mass, params.omega0, params.omega1, params.hbar
    c, s = np.cos(w1 * t), np.sin(w1 * t)
    var_x = kappa * hbar / (2.0 * m * w0) * (c ** 2 + r * s ** 2)
    var_p = kappa * hbar * m * w0 / 2.0 * (c ** 2 + s ** 2 / r)
    cov_xp = 0.5 * kappa * hbar * (w0 / w1 - w1 / w0) * s * c
    return var_x, var_p, cov_xp


def total_energy(params: PhysicalParams, state: GaussianState, omega: float) -> float:
    """Fluctuation energy V_p/(2m) + mω²V_z/2 of a state in a trap of frequency ω (J)."""
    return state.var_p / (2.0 * params.mass) + 0.5 * params.mass * omega ** 2 * state.var_z


def energy_trace(params: PhysicalParams, trajectory: Trajectory, omega: ArrayLike) -> np.ndarray:
    """`total_energy` evaluated along a trajectory; omega may be scalar or per sample."""
    omega = np.asarray(omega, dtype=float)
    return trajectory.var_p / (2.0 * params.mass) + 0.5 * params.mass * omega ** 2 * trajectory.var_z
