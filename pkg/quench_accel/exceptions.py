"""
Exception hierarchy for quench-accel.

Library code raises these; only the command-line front end maps them to
exit codes (1 for usage and configuration problems, 2 for numerical
failures).
"""

from typing import Iterable


class QuenchAccelError(Exception):
    """Base class for all errors raised by quench-accel."""


class InvalidParamsError(QuenchAccelError, ValueError):
    """A value violates a documented invariant."""


class ConfigError(QuenchAccelError, ValueError):
    """
    Configuration could not be turned into a valid run.

    Args:
        problems: One "field: problem" string per offending field.
    """

    def __init__(self, problems: Iterable[str]):
        self.problems = list(problems)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.problems))


class NumericalError(QuenchAccelError, RuntimeError):
    """A computation failed or produced non-finite output."""


class FitError(NumericalError):
    """A least-squares fit failed to converge or is not identifiable."""


class HeatingInferenceError(NumericalError):
    """
    Heating-rate inference did not find an interior minimum.

    Attributes:
        rate: The grid value at which the objective was smallest (K/s).
    """

    def __init__(self, message: str, rate: float):
        super().__init__(message)
        self.rate = rate
