from typing import Sequence, Tuple

import numpy as np
from scipy import constants

# physical constants (SI)
HBAR: float = constants.hbar
BOLTZMANN: float = constants.k
LIGHT_SPEED: float = constants.c
STANDARD_GRAVITY: float = constants.g
AMU: float = constants.atomic_mass

# molecular masses used by the background-gas heating model
N2_MASS: float = 4.65e-26
H2_MASS: float = 2.0 * AMU

# quench time constants of the measured intensity ramps (s)
REFERENCE_TAUS: Tuple[float, ...] = (1.95e-6, 3.77e-6, 7.24e-6, 14.9e-6, 36.6e-6, 72.9e-6)
FAST_TAUS: Tuple[float, ...] = REFERENCE_TAUS[:4]

# heating scenarios: pure H2, measured, pure N2 (K/s)
HEATING_SCENARIOS: Tuple[float, ...] = (6e-3, 16e-3, 22e-3)

# used to represent a sampled trace as (time, value) pairs
Sample = Tuple[float, float]
Trace = Sequence[Sample]


def trace_to_arrays(trace: Trace) -> Tuple[np.ndarray, np.ndarray]:
    """
    Splits a sequence of (t, value) pairs into two float arrays.

    Accepts either a sequence of pairs or an (N, 2) array.
    """
    arr = np.asarray(trace, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"Expected a trace of (t, value) pairs, got shape {arr.shape}")
    return arr[:, 0].copy(), arr[:, 1].copy()
