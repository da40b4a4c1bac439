from dataclasses import dataclass, replace
from typing import Iterator, List, Optional

import numpy as np
import pandas as pd

from quench_accel.defs import HBAR
from quench_accel.exceptions import InvalidParamsError, NumericalError

# relative slack on the Heisenberg bound
HEISENBERG_TOL = 1e-6

STATE_FIELDS = ('mean_z', 'mean_p', 'var_z', 'var_p', 'cov_zp')
TRAJECTORY_COLUMNS = {
    't': 't_s',
    'mean_z': 'mean_z_m',
    'mean_p': 'mean_p_kgmps',
    'var_z': 'var_z_m2',
    'var_p': 'var_p_kg2m2ps2',
    'cov_zp': 'cov_zp_kgm2ps',
}


@dataclass(frozen=True)
class GaussianState:
    """
    First and second central moments of the motional state along z.

    Attributes:
        mean_z: ⟨z⟩ (m).
        mean_p: ⟨p⟩ (kg·m/s).
        var_z: V_z (m²).
        var_p: V_p ((kg·m/s)²).
        cov_zp: symmetrised C_zp (kg·m²/s).
    """
    mean_z: float
    mean_p: float
    var_z: float
    var_p: float
    cov_zp: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.to_numpy())):
            raise InvalidParamsError(f"GaussianState moments must be finite: {self}")
        if self.var_z <= 0 or self.var_p <= 0:
            raise InvalidParamsError(f"var_z > 0 and var_p > 0 violated: var_z={self.var_z}, var_p={self.var_p}")

    @property
    def determinant(self) -> float:
        """det of the covariance matrix, V_z·V_p − C_zp²."""
        return self.var_z * self.var_p - self.cov_zp ** 2

    @property
    def sigma_z(self) -> float:
        return float(np.sqrt(self.var_z))

    def satisfies_heisenberg(self, hbar: float = HBAR, tol: float = HEISENBERG_TOL) -> bool:
        return self.determinant >= (hbar / 2.0) ** 2 * (1.0 - tol)

    def to_numpy(self) -> np.ndarray:
        return np.array([self.mean_z, self.mean_p, self.var_z, self.var_p, self.cov_zp], dtype=float)

    @classmethod
    def from_numpy(cls, array) -> 'GaussianState':
        mean_z, mean_p, var_z, var_p, cov_zp = (float(x) for x in array)
        return cls(mean_z, mean_p, var_z, var_p, cov_zp)

    def copy(self, **changes) -> 'GaussianState':
        return replace(self, **changes)


class Trajectory:
    """
    Moments sampled on a strictly increasing time grid.

    Stored column-wise: `times` has shape (N,) and `moments` has shape (5, N)
    in the order of STATE_FIELDS. Indexing returns GaussianState objects.
    """

    def __init__(self, times: np.ndarray, moments: np.ndarray, hbar: float = HBAR,
                 check_heisenberg: bool = True):
        times = np.asarray(times, dtype=float)
        moments = np.asarray(moments, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise InvalidParamsError("Trajectory needs a nonempty 1-D time grid")
        if moments.shape != (5, times.size):
            raise InvalidParamsError(f"moments must have shape (5, {times.size}), got {moments.shape}")
        if np.any(np.diff(times) <= 0):
            raise InvalidParamsError("Trajectory times must be strictly increasing")
        if not np.all(np.isfinite(moments)):
            raise NumericalError("Trajectory contains non-finite moments")
        if np.any(moments[2] <= 0) or np.any(moments[3] <= 0):
            raise NumericalError("Trajectory variances must stay positive")
        if check_heisenberg:
            det = moments[2] * moments[3] - moments[4] ** 2
            bad = det < (hbar / 2.0) ** 2 * (1.0 - HEISENBERG_TOL)
            if np.any(bad):
                idx = int(np.argmax(bad))
                raise NumericalError(f"Heisenberg bound violated at t={times[idx]:.6e} s")
        self.times = times
        self.moments = moments

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, index: int) -> GaussianState:
        return GaussianState.from_numpy(self.moments[:, index])

    def __iter__(self) -> Iterator[GaussianState]:
        for i in range(len(self)):
            yield self[i]

    @property
    def states(self) -> List[GaussianState]:
        return list(self)

    @property
    def mean_z(self) -> np.ndarray:
        return self.moments[0]

    @property
    def mean_p(self) -> np.ndarray:
        return self.moments[1]

    @property
    def var_z(self) -> np.ndarray:
        return self.moments[2]

    @property
    def var_p(self) -> np.ndarray:
        return self.moments[3]

    @property
    def cov_zp(self) -> np.ndarray:
        return self.moments[4]

    @property
    def sigma_z(self) -> np.ndarray:
        return np.sqrt(self.moments[2])

    def state_at(self, t: float) -> GaussianState:
        """Moments at time t, linearly interpolated between grid points."""
        if t < self.times[0] or t > self.times[-1]:
            raise InvalidParamsError(f"t={t} outside trajectory range [{self.times[0]}, {self.times[-1]}]")
        return GaussianState.from_numpy([np.interp(t, self.times, row) for row in self.moments])

    def to_dataframe(self) -> pd.DataFrame:
        data = {TRAJECTORY_COLUMNS['t']: self.times}
        for i, name in enumerate(STATE_FIELDS):
            data[TRAJECTORY_COLUMNS[name]] = self.moments[i]
        return pd.DataFrame(data)

    def write_csv(self, path: str) -> None:
        self.to_dataframe().to_csv(path, index=False, float_format='%.12e')

    @classmethod
    def from_dataframe(cls, frame: pd.DataFrame, hbar: Optional[float] = None) -> 'Trajectory':
        times = frame[TRAJECTORY_COLUMNS['t']].to_numpy(dtype=float)
        moments = np.vstack([frame[TRAJECTORY_COLUMNS[name]].to_numpy(dtype=float) for name in STATE_FIELDS])
        return cls(times, moments, hbar=hbar if hbar is not None else HBAR)
