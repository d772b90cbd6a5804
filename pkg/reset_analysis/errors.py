"""
Exception hierarchy for reset element analysis.
The CLI maps each family to a stable exit code.
"""


class ResetAnalysisError(Exception):
    """Base class for every error raised by this package"""


class DimensionError(ResetAnalysisError, ValueError):
    """Matrix shapes are not square or not conformable"""


class SingularMatrixError(ResetAnalysisError, ArithmeticError):
    """A linear solve hit a (numerically) singular matrix"""


class NotHurwitzError(ResetAnalysisError, ValueError):
    """A steady-state quantity was requested for a non-Hurwitz base system"""


class SteadyStateNotReached(ResetAnalysisError, RuntimeError):
    """Consecutive simulated periods never agreed within tolerance"""


class ConvergenceGateError(ResetAnalysisError):
    """The uniform-convergence scan failed for an element that requires it"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class AliasingError(ResetAnalysisError, ValueError):
    """Requested harmonic order is not resolvable with the available samples"""


class SpecParseError(ResetAnalysisError, ValueError):
    """A command-line flag or spec-file entry could not be parsed"""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag
