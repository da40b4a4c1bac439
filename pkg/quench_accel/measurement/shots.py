# measurement/shots.py

"""
Synthetic single-shot readouts.

Every shot is the absolute value of one draw of z from the Gaussian state at
the measurement time, the readout recovering only the oscillation amplitude.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
import pandas as pd

from quench_accel.exceptions import InvalidParamsError
from quench_accel.model.state import GaussianState

# repetitions per measurement point in the reference experiment
DEFAULT_SHOTS = 300


@dataclass(frozen=True, eq=False)
class ShotSet:
    """
    Attributes:
        samples: |z| readouts (m), all ≥ 0.
        measure_time: Time after the quench at which the shots were taken (s).
        tilt: Table tilt of the run (rad).
        seed: Seed of the generator that produced the shots.
    """
    samples: np.ndarray
    measure_time: float = 0.0
    tilt: float = 0.0
    seed: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).ravel()
        if samples.size < 1:
            raise InvalidParamsError("ShotSet needs at least one sample")
        if np.any(samples < 0) or not np.all(np.isfinite(samples)):
            raise InvalidParamsError("ShotSet samples must be finite and non-negative")
        object.__setattr__(self, 'samples', samples)

    def __len__(self) -> int:
        return self.samples.size

    def sidecar(self) -> Dict[str, Any]:
        return {
            'measure_time_s': self.measure_time,
            'tilt_rad': self.tilt,
            'seed': self.seed,
            'count': len(self),
            **self.metadata,
        }

    def to_csv(self, path: str) -> str:
        """
        Writes the samples as a `sample_m` column plus a JSON sidecar.

        Returns:
            str: Path of the sidecar file.
        """
        pd.DataFrame({'sample_m': self.samples}).to_csv(path, index=False, float_format='%.12e')
        sidecar_path = path + '.json'
        with open(sidecar_path, 'w') as f:
            json.dump(self.sidecar(), f, indent=2, sort_keys=True)
        return sidecar_path

    @classmethod
    def from_csv(cls, path: str) -> 'ShotSet':
        data = pd.read_csv(path)
        if 'sample_m' not in data.columns:
            raise InvalidParamsError(f"{path}: missing column 'sample_m'")
        try:
            with open(path + '.json') as f:
                meta = json.load(f)
        except FileNotFoundError:
            meta = {}
        extra = {k: v for k, v in meta.items() if k not in ('measure_time_s', 'tilt_rad', 'seed', 'count')}
        return cls(
            samples=data['sample_m'].to_numpy(dtype=float),
            measure_time=float(meta.get('measure_time_s', 0.0)),
            tilt=float(meta.get('tilt_rad', 0.0)),
            seed=int(meta.get('seed', 0)),
            metadata=extra,
        )


def draw_abs_positions(state: GaussianState, n: int, rng: np.random.Generator) -> np.ndarray:
    """n values |z| with z ~ Normal(mean_z, var_z) drawn from an existing generator."""
    return np.abs(rng.normal(state.mean_z, state.sigma_z, size=n))


def sample_shots(state: GaussianState, n: int = DEFAULT_SHOTS, seed: int = 0,
                 measure_time: float = 0.0, tilt: float = 0.0) -> ShotSet:
    """
    Draws n absolute-position readouts from a Gaussian state.

    Deterministic for a given (state, n, seed); each call owns its generator.

    Raises:
        InvalidParamsError: If n < 1.
    """
    if n < 1:
        raise InvalidParamsError(f"n >= 1 violated: n={n}")
    rng = np.random.default_rng(seed)
    return ShotSet(draw_abs_positions(state, n, rng), measure_time=measure_time, tilt=tilt, seed=seed)
