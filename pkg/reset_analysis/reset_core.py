"""
Reset element model, canonical presets and the uniform-convergence scan.

    x'(t)   = A_r x(t) + B_r u(t)      while u != 0
    x(t^+)  = A_rho x(t)               when  u == 0
    y(t)    = C_r x(t) + D_r u(t)
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from loguru import logger

from .config import ResetConfig
from .errors import DimensionError
from .lti import StateSpace, poles
from .matkit import as_mat, mat_exp_stack


def reset_matrix_from(value, m: int) -> np.ndarray:
    """Scalar gamma means gamma * I; anything else must already be m x m"""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(m)
    arr = as_mat(arr, "A_rho")
    if arr.shape != (m, m):
        raise DimensionError(f"A_rho must be {m}x{m}, got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ResetElement:
    """Base linear system plus reset matrix A_rho and time regularization delta_m"""
    base: StateSpace
    reset_matrix: np.ndarray
    delta_m: float = ResetConfig.DELTA_M_DEFAULT
    name: str = "custom"

    def __post_init__(self):
        if not self.base.is_siso:
            raise DimensionError("reset elements are single-input single-output")
        reset = reset_matrix_from(self.reset_matrix, self.base.state_dim)
        reset.setflags(write=False)
        object.__setattr__(self, "reset_matrix", reset)
        if not np.isfinite(self.delta_m) or self.delta_m < 0:
            raise ValueError(f"delta_m must be >= 0, got {self.delta_m}")

    @property
    def state_dim(self) -> int:
        return self.base.state_dim

    @property
    def is_integrator(self) -> bool:
        return bool(np.all(self.base.A == 0))


def make_fore(omega_r: float, reset_matrix=0.0, delta_m: float = None) -> ResetElement:
    """First order reset element: A=-w_r, B=w_r, C=1, D=0"""
    if not omega_r > 0:
        raise ValueError(f"omega_r must be > 0, got {omega_r}")
    base = StateSpace([[-omega_r]], [[omega_r]], [[1.0]], [[0.0]])
    return ResetElement(base, reset_matrix_from(reset_matrix, 1),
                        ResetConfig.DELTA_M_DEFAULT if delta_m is None else delta_m, "fore")


def make_sore(omega_r: float, beta_r: float, reset_matrix=0.0, delta_m: float = None) -> ResetElement:
    """Second order reset element with natural frequency w_r and damping beta_r"""
    if not omega_r > 0:
        raise ValueError(f"omega_r must be > 0, got {omega_r}")
    if not np.isfinite(beta_r):
        raise ValueError(f"beta_r must be finite, got {beta_r}")
    base = StateSpace(
        [[0.0, 1.0], [-omega_r ** 2, -2.0 * beta_r * omega_r]],
        [[0.0], [omega_r ** 2]],
        [[1.0, 0.0]],
        [[0.0]],
    )
    return ResetElement(base, reset_matrix_from(reset_matrix, 2),
                        ResetConfig.DELTA_M_DEFAULT if delta_m is None else delta_m, "sore")


def make_integrator(m: int = 1, reset_matrix=0.0, delta_m: float = None) -> ResetElement:
    """m decoupled reset integrators sharing one scalar input; output is the first state"""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be an integer >= 1, got {m}")
    m = int(m)
    output_row = np.zeros((1, m))
    output_row[0, 0] = 1.0
    base = StateSpace(np.zeros((m, m)), np.ones((m, 1)), output_row, [[0.0]])
    return ResetElement(base, reset_matrix_from(reset_matrix, m),
                        ResetConfig.DELTA_M_DEFAULT if delta_m is None else delta_m, "integrator")


def make_custom(A, B, C, D, reset_matrix, delta_m: float = None) -> ResetElement:
    base = StateSpace(A, B, C, D)
    return ResetElement(base, reset_matrix_from(reset_matrix, base.state_dim),
                        ResetConfig.DELTA_M_DEFAULT if delta_m is None else delta_m, "custom")


def with_reset_matrix(el: ResetElement, reset_matrix) -> ResetElement:
    """Copy of el with another reset matrix (A_rho = I disables resets)"""
    return replace(el, reset_matrix=reset_matrix_from(reset_matrix, el.state_dim))


def apply_reset(el: ResetElement, x) -> np.ndarray:
    """Linear reset law x^+ = A_rho x"""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != el.state_dim:
        raise DimensionError(f"state has {x.shape[-1]} entries, element has {el.state_dim}")
    return x @ el.reset_matrix.T


def shaping_system(el: ResetElement) -> StateSpace:
    """Realization (A_r, A_r, I, I) of T_q(s) = (sI - A_r)^{-1} s"""
    m = el.state_dim
    return StateSpace(el.base.A, el.base.A, np.eye(m), np.eye(m))


def reset_instants(omega: float, count: int) -> np.ndarray:
    """Zeros of b sin(wt): t_k = k pi / w for k = 0..count-1"""
    return np.arange(count) * (np.pi / omega)


def locate(omega: float, t, left_limit=None, config: ResetConfig = None):
    """Half-period index k and offset tau = t - t_k for each time

    Times within BOUNDARY_SNAP of a reset instant are snapped onto it; with
    ``left_limit`` set they are attributed to the preceding half-period
    (tau = pi / w), which is the pre-reset side.
    """
    config = config or ResetConfig()
    half = np.pi / omega
    t = np.asarray(t, dtype=float)
    phase = t / half
    k = np.floor(phase)
    nearest = np.round(phase)
    snapped = np.abs(phase - nearest) < config.BOUNDARY_SNAP
    k = np.where(snapped, nearest, k)
    tau = np.where(snapped, 0.0, t - k * half)
    if left_limit is not None:
        left = np.broadcast_to(np.asarray(left_limit, dtype=bool), t.shape) & snapped
        k = np.where(left, k - 1, k)
        tau = np.where(left, half, tau)
    return k.astype(int), tau


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Sampled scan of rho(A_rho e^{A_r delta}) over a log-spaced delta grid"""
    max_radius: float
    worst_delta: float
    passed: bool
    delta_grid: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"convergence {verdict}: max |lambda(A_rho e^(A_r d))| = {self.max_radius:.6g} "
                f"at d = {self.worst_delta:.6g} s over {len(self.delta_grid)} grid points")


def default_delta_max(el: ResetElement, omega: Optional[float] = None) -> float:
    """10x the slowest time constant, or 10 periods when A_r has no decaying mode"""
    decay = np.abs(poles(el.base).real)
    decay = decay[decay > 0]
    if decay.size:
        return 10.0 / float(np.min(decay))
    omega = 1.0 if omega is None else omega
    return 10.0 * 2.0 * np.pi / omega


def check_convergence(el: ResetElement, delta_max: float = None, n_grid: int = None,
                      omega: float = None, config: ResetConfig = None) -> ConvergenceReport:
    """Heuristic gate for |lambda(A_rho e^{A_r delta})| < 1 for all delta > 0"""
    config = config or ResetConfig()
    delta_max = default_delta_max(el, omega) if delta_max is None else delta_max
    n_grid = config.CONVERGENCE_N_GRID if n_grid is None else n_grid
    if not delta_max > 0:
        raise ValueError(f"delta_max must be > 0, got {delta_max}")
    if n_grid < 2:
        raise ValueError(f"n_grid must be >= 2, got {n_grid}")

    grid = np.geomspace(delta_max * config.CONVERGENCE_GRID_FLOOR, delta_max, int(n_grid))
    products = el.reset_matrix[None, :, :] @ mat_exp_stack(el.base.A, grid)
    radii = np.max(np.abs(np.linalg.eigvals(products)), axis=-1)
    worst = int(np.argmax(radii))
    report = ConvergenceReport(
        max_radius=float(radii[worst]),
        worst_delta=float(grid[worst]),
        passed=bool(radii[worst] < 1.0 - config.CONVERGENCE_MARGIN),
        delta_grid=grid,
        radii=radii,
    )
    logger.debug(report.summary())
    return report
