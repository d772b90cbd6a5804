from .config import ResetConfig
from .errors import (AliasingError, ConvergenceGateError, DimensionError, NotHurwitzError, ResetAnalysisError,
                     SingularMatrixError, SpecParseError, SteadyStateNotReached)
from .lti import Sinusoid, StateSpace, freq_response, propagate_interval, sss_state, x_bls_at_reset
from .reset_core import (ConvergenceReport, ResetElement, apply_reset, check_convergence, make_custom, make_fore,
                         make_integrator, make_sore, with_reset_matrix)
from .simulator import HarmonicSet, SimTrace, measure_harmonics, simulate, steady_state_window
from .decomposition import (Decomposition, SquareWave, decompose, qstar_at, qstar_boundary, reconstruct, scaling,
                            scaling_closed_form, scaling_lstsq, square_wave)
from .hosidf import HosidfTable, ValidationReport, hosidf, partial_fourier_q, q_harmonic, sweep, validate

__all__ = [
    'ResetConfig',
    'ResetAnalysisError',
    'DimensionError',
    'SingularMatrixError',
    'NotHurwitzError',
    'SteadyStateNotReached',
    'ConvergenceGateError',
    'AliasingError',
    'SpecParseError',
    'StateSpace',
    'Sinusoid',
    'freq_response',
    'sss_state',
    'x_bls_at_reset',
    'propagate_interval',
    'ResetElement',
    'ConvergenceReport',
    'make_integrator',
    'make_fore',
    'make_sore',
    'make_custom',
    'with_reset_matrix',
    'apply_reset',
    'check_convergence',
    'SimTrace',
    'HarmonicSet',
    'simulate',
    'steady_state_window',
    'measure_harmonics',
    'SquareWave',
    'Decomposition',
    'square_wave',
    'qstar_boundary',
    'qstar_at',
    'scaling_closed_form',
    'scaling_lstsq',
    'scaling',
    'reconstruct',
    'decompose',
    'HosidfTable',
    'ValidationReport',
    'q_harmonic',
    'hosidf',
    'sweep',
    'validate',
    'partial_fourier_q',
]
