"""
Experiment Controller Module

This module drives complete analyses from a resolved RunConfig: it builds
the intensity profiles for every sweep point, fans independent runs out
over a worker pool, writes plot-ready tables and JSON reports, and finishes
every command with a manifest listing the resolved configuration, the seed
and the hash of every file written.

Commands:
1. simulate      - moment trajectories per (τ, tilt)
2. sensitivity   - S(T_opt) versus τ with heating scenarios and error bars
3. allan         - overlapping Allan deviation of a long accelerometer run
4. qfi           - quantum Fisher information report with uncertainty
5. heating       - heating-rate budget and optional inference from σ traces
6. fit-profile   - intensity-model fit to a measured trace
7. fit-histogram - folded-normal fit to single-shot readouts

Workers only compute; all files are written by the controller process in
sweep order, so results do not depend on the number of workers.
"""

import logging
import math
import multiprocessing as mp
import os
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from quench_accel.defs import HEATING_SCENARIOS, REFERENCE_TAUS
from quench_accel.dynamics.intensity_profiles import QuenchProfile
from quench_accel.dynamics.moment_dynamics import integrate
from quench_accel.dynamics.profile_fit import fit_profile, load_intensity_trace
from quench_accel.exceptions import ConfigError, InvalidParamsError
from quench_accel.heating.inference import HeatingRateEstimator, infer_heating_rate, load_sigma_trace
from quench_accel.heating.models import (
    GasSpec,
    gas_heating_rate,
    lpn_heating,
    nitrogen_fraction_for_rate,
    photon_recoil_heating_rate,
)
from quench_accel.measurement.fits import fit_folded_normal
from quench_accel.measurement.pipeline import DEFAULT_TILTS, measure_sensitivity, states_at
from quench_accel.measurement.shots import DEFAULT_SHOTS, ShotSet, sample_shots
from quench_accel.metrology.qfi import position_fisher_information, qfi_half_period, qfi_sudden
from quench_accel.metrology.sensitivity import analysis_end, optimal_sensitivity
from quench_accel.model.params import acceleration_from_tilt
from quench_accel.stability.allan import AccelSeries, overlapping_allan, synthesize_long_run
from quench_accel.uncertainty.propagation import (
    Measured,
    qfi_log_coefficients,
    qfi_uncertainty,
    small_angle_bound,
)
from quench_accel.utils.config import RunConfig
from quench_accel.utils.io import write_json, write_manifest, write_table
from quench_accel.utils.logger import setup_logger

COMMANDS = ('simulate', 'sensitivity', 'allan', 'qfi', 'heating', 'fit-profile', 'fit-histogram')


def tau_label(tau: Optional[float]) -> str:
    return 'step' if not tau else f"tau_{tau * 1e6:.2f}us"


def tilt_label(tilt: float) -> str:
    return f"tilt_{math.degrees(tilt):+.3f}deg"


def heating_column(rate: float) -> str:
    return f"S_{rate * 1e3:g}mKps_s2pm"


def _simulate_job(job: Tuple[RunConfig, Optional[float], float]) -> pd.DataFrame:
    config, tau, tilt = job
    params = config.params
    profile = config.profile_for(tau)
    t_end = config.simulation.t_end or analysis_end(params, profile)
    trajectory = integrate(params, profile, acceleration_from_tilt(params, tilt), t_end,
                           dt=config.simulation.dt, dt_out=config.simulation.dt_out)
    return trajectory.to_dataframe()


def _sensitivity_job(job: Tuple[RunConfig, Optional[float], Tuple[float, ...]]) -> Dict[str, Any]:
    config, tau, scenarios = job
    params = config.params
    profile = config.profile_for(tau)
    sim = config.simulation
    results = {}
    for rate in sorted(set(scenarios) | {params.heating_rate}):
        results[rate] = optimal_sensitivity(params, profile, heating=rate, delta_a=sim.delta_a,
                                            threshold=sim.t_opt_threshold, dt=sim.dt, dt_out=sim.dt_out)
    main = results[params.heating_rate]
    tilts = config.sweep.tilt if config.sweep.tilt and len(set(config.sweep.tilt)) >= 3 else DEFAULT_TILTS
    measured = measure_sensitivity(params, profile, main.t_opt, tilts=tilts, shots=DEFAULT_SHOTS,
                                   seed=config.run.seed, calibration=config.uncertainty.calibration,
                                   dt_out=sim.dt_out)
    row = {
        'tau_s': 0.0 if not tau else tau,
        'T_opt_s': main.t_opt,
        'S_s2pm': main.sensitivity,
        'dS_s2pm': measured.sensitivity.sigma,
    }
    for rate in scenarios:
        row[heating_column(rate)] = results[rate].sensitivity
    row['bound_ratio'] = main.bound.ratio
    return {'row': row, 'curve': main.curve.to_dataframe()}


class ExperimentController:
    """
    Runs the analysis commands for one resolved configuration.

    Attributes:
        config: The resolved run configuration.
        logger: Controller logger.
        written: Files written by the current command.
    """

    def __init__(self, config: RunConfig, log_file: Optional[str] = None, verbose: bool = False):
        """
        Args:
            config: Resolved run configuration.
            log_file: Optional log file path; stderr otherwise.
            verbose: Log at DEBUG instead of INFO.
        """
        self.config = config
        self.log_file = log_file
        self.logger = setup_logger('ExperimentController', log_file,
                                   level=logging.DEBUG if verbose else logging.INFO)
        self.written: List[str] = []
        self.logger.info(f"ExperimentController ready, output directory {self.output_dir}")

    @property
    def output_dir(self) -> str:
        return self.config.run.output_dir

    @property
    def workers(self) -> int:
        return self.config.run.workers or os.cpu_count() or 1

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _map(self, func: Callable, jobs: Sequence[Any]) -> List[Any]:
        """Maps `func` over jobs, in a process pool when more than one worker is configured."""
        workers = min(self.workers, len(jobs))
        if workers <= 1:
            return [func(job) for job in jobs]
        self.logger.debug(f"Dispatching {len(jobs)} jobs to {workers} workers")
        with mp.Pool(workers) as pool:
            return pool.map(func, jobs)

    def _table(self, frame: pd.DataFrame, stem: str) -> str:
        path = write_table(frame, self._path(stem), self.config.run.format)
        self.written.append(path)
        return path

    def _report(self, report: Dict[str, Any], name: str) -> str:
        path = write_json(report, self._path(name))
        self.written.append(path)
        return path

    def execute(self, command: str, input_paths: Optional[Sequence[str]] = None) -> str:
        """
        Runs one command and writes its manifest.

        Args:
            command: One of COMMANDS.
            input_paths: Input files for allan, heating, fit-profile and fit-histogram.

        Returns:
            str: Path of the manifest.
        """
        handlers: Dict[str, Callable[[Sequence[str]], None]] = {
            'simulate': lambda _: self.simulate(),
            'sensitivity': lambda _: self.sensitivity(),
            'allan': self.allan,
            'qfi': lambda _: self.qfi(),
            'heating': self.heating,
            'fit-profile': self.fit_profile,
            'fit-histogram': self.fit_histogram,
        }
        if command not in handlers:
            raise ConfigError([f"command: unknown command '{command}'"])
        os.makedirs(self.output_dir, exist_ok=True)
        self.written = []
        self.logger.info(f"Running {command}")
        handlers[command](list(input_paths or []))
        manifest = write_manifest(self.output_dir, command, self.config.to_dict(), self.config.run.seed,
                                  self.written)
        self.logger.info(f"{command} wrote {len(self.written)} file(s); manifest {manifest}")
        return manifest

    def simulate(self) -> List[str]:
        """One trajectory table per (τ, tilt) sweep point."""
        points = [(tau, tilt) for tau in self.config.taus() for tilt in self.config.tilts()]
        frames = self._map(_simulate_job, [(self.config, tau, tilt) for tau, tilt in points])
        paths = []
        for (tau, tilt), frame in zip(points, frames):
            paths.append(self._table(frame, f"trajectory_{tau_label(tau)}_{tilt_label(tilt)}"))
        return paths

    def sensitivity(self) -> pd.DataFrame:
        """
        S(T_opt) versus τ, with dS from a synthetic tilt sweep and one column
        per heating scenario.
        """
        taus = self.config.taus() if self.config.sweep.tau else list(REFERENCE_TAUS)
        scenarios = tuple(self.config.sweep.heating or HEATING_SCENARIOS)
        results = self._map(_sensitivity_job, [(self.config, tau, scenarios) for tau in taus])
        table = pd.DataFrame([r['row'] for r in results])
        for tau, result in zip(taus, results):
            self._table(result['curve'], f"sensitivity_curve_{tau_label(tau)}")
        self._table(table, 'sensitivity')
        violated = table['bound_ratio'] > 1.0
        if violated.any():
            self.logger.warning(f"S/√F_Q exceeds 1 for τ = {list(table.loc[violated, 'tau_s'])}")
        return table

    def allan(self, input_paths: Sequence[str]) -> pd.DataFrame:
        """Allan deviation of an input series, or of a synthesised long run."""
        allan_cfg = self.config.allan
        if input_paths:
            series = AccelSeries.from_csv(_existing(input_paths[0]))
        else:
            series = synthesize_long_run(
                self.config.params, self.config.profile, tilt=self.config.tilts()[0],
                shots_per_point=allan_cfg.shots_per_point, duration=allan_cfg.duration,
                seed=self.config.run.seed, sample_rate=allan_cfg.sample_rate, drift=allan_cfg.drift,
                delta_a=self.config.simulation.delta_a, threshold=self.config.simulation.t_opt_threshold,
                logger=self.logger,
            )
            path = self._path('accel_series.csv')
            self.written.extend([path, series.to_csv(path)])
        result = overlapping_allan(series)
        t_floor, floor = result.floor()
        self._table(result.to_dataframe(), 'allan')
        self._report({'samples': len(series), 'sample_rate_hz': series.sample_rate,
                      'floor_t_A_s': t_floor, 'floor_allan_mps2': floor}, 'allan_summary.json')
        self.logger.info(f"Allan floor {floor:.3e} m/s² at t_A = {t_floor:.1f} s over {len(series)} samples")
        return result.to_dataframe()

    def qfi(self) -> Dict[str, Any]:
        """QFI at the half period with propagated uncertainty and related scalars."""
        params, unc = self.config.params, self.config.uncertainty
        half = qfi_half_period(params)
        measured = qfi_uncertainty(Measured(params.mass, unc.mass), Measured(params.nbar, unc.nbar),
                                   Measured(params.omega0, unc.omega0), Measured(params.omega1, unc.omega1),
                                   hbar=params.hbar, logger=self.logger)
        c0, c1 = qfi_log_coefficients(half.r)
        report: Dict[str, Any] = {
            **half.to_report(),
            'F_Q_sigma_s4pm2': measured.sigma,
            'F_Q_relative_uncertainty': measured.relative,
            'dlnF_dlnomega0': c0,
            'dlnF_dlnomega1': c1,
            'static_sensitivity_s2pm': qfi_sudden(params, 0.0).sqrt_value,
            'position_fisher_half_period_s4pm2': position_fisher_information(params, half.time),
        }
        angles = sorted({tilt + params.theta0 for tilt in self.config.tilts()} - {0.0}, key=abs)
        if angles:
            bound = small_angle_bound(angles[-1])
            report.update({'small_angle_theta_rad': angles[-1], 'small_angle_bound': bound.bound,
                           'small_angle_exact': bound.exact})
        self._report(report, 'qfi.json')
        return report

    def heating(self, input_paths: Sequence[str]) -> Dict[str, Any]:
        """Heating budget; with σ-trace inputs also the inferred heating rate."""
        params, spec = self.config.params, self.config.heating
        try:
            fraction = nitrogen_fraction_for_rate(params, params.heating_rate)
        except InvalidParamsError:
            fraction = None
        report: Dict[str, Any] = {
            'gas_heating_rate_Kps': gas_heating_rate(params, spec.gas),
            'nitrogen_heating_rate_Kps': gas_heating_rate(params, GasSpec.nitrogen()),
            'hydrogen_heating_rate_Kps': gas_heating_rate(params, GasSpec.hydrogen()),
            'nitrogen_fraction_for_configured_rate': fraction,
            'photon_recoil_heating_rate_Kps': photon_recoil_heating_rate(params),
            'lpn': lpn_heating(params, spec.lpn).to_report(),
        }
        if input_paths:
            traces = [load_sigma_trace(_existing(p)) for p in input_paths]
            estimator = HeatingRateEstimator(params, dt=self.config.simulation.dt,
                                             dt_out=self.config.simulation.dt_out, log_file=self.log_file)
            profiles = [self.config.profile_for(tau) for tau, _ in traces]
            report['inference'] = infer_heating_rate(traces, params, profiles, estimator=estimator).to_report()
        self._report(report, 'heating.json')
        return report

    def fit_profile(self, input_paths: Sequence[str]) -> Dict[str, Any]:
        """Fits the blended intensity model to a `t_s,intensity` trace."""
        if not input_paths:
            raise ConfigError(["--input: fit-profile needs an intensity trace CSV"])
        times, values = load_intensity_trace(_existing(input_paths[0]))
        init = self.config.profile
        if not isinstance(init, QuenchProfile):
            init = QuenchProfile.for_tau(self.config.params, REFERENCE_TAUS[0], t0=float(times[0]),
                                         intensity0=float(values[0]))
        result = fit_profile(np.column_stack((times, values)), init, logger=self.logger)
        report = result.to_report()
        self._report(report, 'profile_fit.json')
        return report

    def fit_histogram(self, input_paths: Sequence[str]) -> Dict[str, Any]:
        """
        Folded-normal fit of single-shot readouts; without input, 300 shots
        are synthesised at T_opt of the configured profile.
        """
        if input_paths:
            shots = ShotSet.from_csv(_existing(input_paths[0]))
        else:
            shots = self._synthesize_shots()
            path = self._path('shots.csv')
            self.written.extend([path, shots.to_csv(path)])
        fit = fit_folded_normal(shots, logger=self.logger)
        report = {**fit.to_report(), 'count': len(shots), 'measure_time_s': shots.measure_time,
                  'tilt_rad': shots.tilt}
        self._report(report, 'histogram_fit.json')
        return report

    def _synthesize_shots(self) -> ShotSet:
        params, profile, sim = self.config.params, self.config.profile, self.config.simulation
        opt = optimal_sensitivity(params, profile, delta_a=sim.delta_a, threshold=sim.t_opt_threshold,
                                  dt=sim.dt, dt_out=sim.dt_out, logger=self.logger)
        tilt = self.config.tilts()[0]
        state = states_at(params, profile, [tilt], opt.t_opt, dt_out=sim.dt_out)[0]
        return sample_shots(state, n=DEFAULT_SHOTS, seed=self.config.run.seed, measure_time=opt.t_opt, tilt=tilt)


def _existing(path: str) -> str:
    if not os.path.exists(path):
        raise ConfigError([f"--input: file not found {path}"])
    return path
