import math

import numpy as np
import pytest

from quench_accel.exceptions import FitError, InvalidParamsError
from quench_accel.measurement.fits import (
    fit_folded_normal,
    fit_gaussian,
    fit_rectified_sinusoid,
    rectified_sinusoid,
    tilt_sweep_slope,
)
from quench_accel.measurement.shots import ShotSet, sample_shots
from quench_accel.model.state import GaussianState


def _state(mu, sigma):
    return GaussianState(mean_z=mu, mean_p=0.0, var_z=sigma ** 2, var_p=1e-40, cov_zp=0.0)


def _folded(mu, sigma, n, seed):
    return np.abs(np.random.default_rng(seed).normal(mu, sigma, n))


def test_sample_shots_is_deterministic_and_non_negative():
    state = _state(-1e-9, 0.2e-9)
    first = sample_shots(state, n=300, seed=4)
    second = sample_shots(state, n=300, seed=4)
    assert len(first) == 300
    assert np.array_equal(first.samples, second.samples)
    assert np.all(first.samples >= 0)
    assert not np.array_equal(first.samples, sample_shots(state, n=300, seed=5).samples)


def test_sample_shots_rejects_empty_request():
    with pytest.raises(InvalidParamsError):
        sample_shots(_state(0.0, 1e-9), n=0)


def test_shot_set_csv_keeps_metadata(tmp_path):
    shots = sample_shots(_state(1e-9, 0.1e-9), n=60, seed=2, measure_time=84e-6, tilt=0.01)
    path = tmp_path / 'shots.csv'
    sidecar = shots.to_csv(str(path))
    assert sidecar.endswith('shots.csv.json')
    restored = ShotSet.from_csv(str(path))
    assert restored.seed == 2
    assert restored.measure_time == pytest.approx(84e-6)
    assert restored.tilt == pytest.approx(0.01)
    assert np.allclose(restored.samples, shots.samples, rtol=1e-11, atol=0)


def test_folded_fit_recovers_parameters():
    fit = fit_folded_normal(_folded(1e-9, 0.1e-9, 10_000, seed=1))
    assert fit.mu == pytest.approx(1e-9, rel=0.01)
    assert fit.sigma == pytest.approx(0.1e-9, rel=0.05)
    assert 0 < fit.se_mu < 0.01e-9
    assert fit.bins >= 8


def test_folded_fit_matches_gaussian_fit_far_from_the_fold():
    samples = _folded(1e-9, 0.1e-9, 100_000, seed=5)
    folded = fit_folded_normal(samples)
    gaussian = fit_gaussian(samples)
    assert folded.mu == pytest.approx(gaussian.mu, rel=0.01)
    assert folded.sigma == pytest.approx(gaussian.sigma, rel=0.01)


def test_folded_fit_errors_shrink_with_sample_size():
    sigma = 0.3e-9
    errors = []
    for n in (1_000, 10_000, 100_000):
        fit = fit_folded_normal(_folded(1e-9, sigma, n, seed=7))
        # Poisson-weighted bins give absolute errors close to σ/√n
        assert 0.8 <= fit.se_mu * math.sqrt(n) / sigma <= 1.3
        errors.append(fit.se_mu)
    for larger_n, smaller_n in zip(errors, errors[1:]):
        assert larger_n / smaller_n == pytest.approx(math.sqrt(10), rel=0.25)


def test_half_normal_shots_have_the_half_normal_mean():
    shots = sample_shots(_state(0.0, 1e-9), n=100_000, seed=8)
    assert np.mean(shots.samples) == pytest.approx(1e-9 * math.sqrt(2 / math.pi), rel=0.01)


def test_folded_fit_of_half_normal_has_small_mean():
    fit = fit_folded_normal(_folded(0.0, 1e-9, 10_000, seed=3))
    assert fit.mu < 0.5 * fit.sigma
    assert fit.sigma == pytest.approx(1e-9, rel=0.1)


def test_folded_fit_is_within_standard_errors_when_folding():
    mu, sigma = 0.5e-9, 0.5e-9
    hits = 0
    for seed in range(30):
        fit = fit_folded_normal(_folded(mu, sigma, 5_000, seed=seed))
        hits += abs(fit.mu - mu) <= 3 * fit.se_mu and abs(fit.sigma - sigma) <= 3 * fit.se_sigma
    assert hits >= 26


def test_folded_fit_accepts_shot_sets():
    shots = sample_shots(_state(-2e-9, 0.5e-9), n=2_000, seed=9)
    assert fit_folded_normal(shots).mu == pytest.approx(2e-9, rel=0.05)


def test_folded_fit_input_checks():
    with pytest.raises(InvalidParamsError):
        fit_folded_normal(np.ones(49))
    with pytest.raises(InvalidParamsError):
        fit_folded_normal(_folded(1e-9, 0.1e-9, 100, seed=0), bins=5)
    with pytest.raises(FitError):
        fit_folded_normal(np.zeros(100))


def test_gaussian_fit_standard_error():
    samples = np.random.default_rng(0).normal(2.0, 0.5, 400)
    fit = fit_gaussian(samples)
    assert fit.mu == pytest.approx(np.mean(samples))
    assert fit.se_mu == pytest.approx(fit.sigma / 20)


def _sinusoid_trace(A, omega, phi, mu_off, noise, seed):
    t = np.linspace(0.0, 3 * 2 * math.pi / omega, 240)
    y = rectified_sinusoid(t, A, omega, phi, mu_off)
    y = y + noise * A * np.random.default_rng(seed).standard_normal(t.size)
    return np.column_stack((t, y))


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_rectified_sinusoid_fit(seed):
    omega = 2 * math.pi * 5970
    trace = _sinusoid_trace(1e-9, omega, 0.7, 0.3e-9, noise=0.01, seed=seed)
    fit = fit_rectified_sinusoid(trace, omega_init=1.02 * omega)
    assert fit.A == pytest.approx(1e-9, rel=0.05)
    assert fit.omega == pytest.approx(omega, rel=0.01)
    assert math.cos(fit.phi - 0.7) > math.cos(0.05)
    assert fit.mu_off == pytest.approx(0.3e-9, rel=0.1)
    assert fit.se_omega > 0


def test_rectified_sinusoid_fit_is_exact_without_folding():
    omega = 2 * math.pi * 5970
    trace = _sinusoid_trace(0.3e-9, omega, 0.7, 1e-9, noise=0.0, seed=0)
    fit = fit_rectified_sinusoid(trace, omega_init=1.02 * omega)
    assert fit.A == pytest.approx(0.3e-9, rel=1e-6)
    assert fit.omega == pytest.approx(omega, rel=1e-6)
    assert fit.phi == pytest.approx(0.7, abs=1e-6)
    assert fit.mu_off == pytest.approx(1e-9, rel=1e-6)


def test_rectified_sinusoid_fit_is_within_standard_errors_when_folding():
    omega = 2 * math.pi * 5970
    hits = 0
    for seed in range(30):
        fit = fit_rectified_sinusoid(_sinusoid_trace(1e-9, omega, 0.7, 0.3e-9, noise=0.01, seed=seed),
                                     omega_init=1.02 * omega)
        hits += (abs(fit.A - 1e-9) <= 3 * fit.se_A and abs(fit.omega - omega) <= 3 * fit.se_omega
                 and abs(fit.mu_off - 0.3e-9) <= 3 * fit.se_mu_off)
    assert hits >= 25


def test_rectified_sinusoid_branch_follows_reference_phase():
    omega = 2 * math.pi * 5970
    trace = _sinusoid_trace(1e-9, omega, 0.7, 0.3e-9, noise=0.01, seed=4)
    fit = fit_rectified_sinusoid(trace, omega_init=omega, phase_ref=0.7 + math.pi)
    assert fit.mu_off < 0
    assert math.cos(fit.phi - (0.7 + math.pi)) > math.cos(0.05)
    assert np.allclose(fit.evaluate(trace[:, 0]), rectified_sinusoid(trace[:, 0], 1e-9, omega, 0.7, 0.3e-9),
                       rtol=0, atol=0.05e-9)


def test_rectified_sinusoid_needs_two_periods():
    omega = 2 * math.pi * 5970
    t = np.linspace(0.0, 1.5 * 2 * math.pi / omega, 50)
    with pytest.raises(InvalidParamsError):
        fit_rectified_sinusoid(np.column_stack((t, np.abs(np.sin(omega * t)))), omega)


def test_tilt_sweep_slope_on_exact_line():
    tilts = [-0.02, -0.01, 0.0, 0.01, 0.02]
    line = tilt_sweep_slope([(x, 2.0 * x + 1.0, 0.1) for x in tilts])
    assert line.slope == pytest.approx(2.0, rel=1e-9)
    assert line.intercept == pytest.approx(1.0, rel=1e-9)
    assert line.se_slope == pytest.approx(0.1 / math.sqrt(sum(x * x for x in tilts)), rel=1e-9)


def test_tilt_sweep_slope_input_checks():
    with pytest.raises(InvalidParamsError):
        tilt_sweep_slope([(0.0, 1.0, 0.1), (0.0, 1.1, 0.1), (0.01, 1.2, 0.1)])
    with pytest.raises(InvalidParamsError):
        tilt_sweep_slope([(0.0, 1.0, 0.1), (0.01, 1.1, 0.0), (0.02, 1.2, 0.1)])
