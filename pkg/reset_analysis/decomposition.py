"""
Steady state of a reset element as base-linear response plus shaped square wave.

    x_ss(t) = x_bls(t) + Q q*(t),     q* = T_q (*) q_i,   T_q(s) = (sI - A_r)^{-1} s

q_i is the square-wave nonlinearity of the reset integrator; it is constant on
each half-period and jumps at the zeros t_k = k*pi/w of the input.  Q is a
constant m x m scaling, closed form for first-order elements and a linear
least-squares fit otherwise.
"""
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from loguru import logger

from .config import ResetConfig
from .errors import DimensionError, SingularMatrixError
from .lti import Sinusoid, sss_state, x_bls_at_reset
from .matkit import as_mat, kron_row_block, lstsq, mat_exp, mat_exp_stack, solve, spectral_radius
from .reset_core import ResetElement, locate

BlsConvention = Literal["zero_ic", "zero_mean"]


@dataclass(frozen=True, eq=False)
class SquareWave:
    """q_i: mean + peak on [t_2n, t_2n+1), mean - peak on [t_2n+1, t_2n+2)"""
    mean: np.ndarray
    peak: np.ndarray
    omega: float

    def value(self, t, left_limit=None) -> np.ndarray:
        k, _ = locate(self.omega, t, left_limit)
        sign = np.where(k % 2 == 0, 1.0, -1.0)
        return self.mean + np.multiply.outer(sign, self.peak)

    @property
    def segments(self):
        return self.mean + self.peak, self.mean - self.peak


def square_wave(reset_matrix, a, omega: float, config: ResetConfig = None) -> SquareWave:
    """Integrator square wave: mean -a/w, peak (I - A_rho)(I + A_rho)^{-1} a/w"""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    reset_matrix = as_mat(reset_matrix, "A_rho")
    m = reset_matrix.shape[0]
    a = np.asarray(a, dtype=float).reshape(-1)
    if reset_matrix.shape != (m, m) or a.shape[0] != m:
        raise DimensionError(f"A_rho {reset_matrix.shape} and a {a.shape} are not conformable")
    eye = np.eye(m)
    # (I - A_rho) and (I + A_rho)^{-1} commute
    peak = solve(eye + reset_matrix, (eye - reset_matrix) @ a, config) / omega
    return SquareWave(mean=-a / omega, peak=peak, omega=float(omega))


def element_square_wave(el: ResetElement, sinusoid: Sinusoid, config: ResetConfig = None) -> SquareWave:
    if el.is_integrator and spectral_radius(el.reset_matrix) >= 1.0:
        logger.warning("rho(A_rho) >= 1: the reset integrator has no unique steady state")
    return square_wave(el.reset_matrix, el.base.B[:, 0] * sinusoid.amplitude, sinusoid.omega, config)


@dataclass(frozen=True, eq=False)
class QStarBoundary:
    """Steady-state q* around the odd reset instant t_2n+1 (even instants are the negation)"""
    x_q: np.ndarray
    pre: np.ndarray
    post: np.ndarray


def qstar_boundary(el: ResetElement, peak, omega: float, config: ResetConfig = None) -> QStarBoundary:
    peak = np.asarray(peak, dtype=float).reshape(-1)
    E = mat_exp(el.base.A * (np.pi / omega))
    eye = np.eye(el.state_dim)
    x_q = solve(E + eye, (E - eye) @ peak, config)
    return QStarBoundary(x_q=x_q, pre=x_q + peak, post=x_q - peak)


def qstar_at(el: ResetElement, sw: SquareWave, t, left_limit=None, config: ResetConfig = None) -> np.ndarray:
    """Steady-state q*(t); shape (m,) for scalar t, (N, m) otherwise

    For invertible A_r the mean of q_i does not pass T_q, so q* = -mean + x_q + q_i
    flows as e^{A_r tau} from the post-reset value of its half-period.
    """
    if el.is_integrator:
        return sw.value(t, left_limit)
    boundary = qstar_boundary(el, sw.peak, sw.omega, config)
    k, tau = locate(sw.omega, t, left_limit, config)
    sign = np.where(k % 2 == 0, -1.0, 1.0)
    flows = mat_exp_stack(el.base.A, np.ravel(tau))
    start = np.multiply.outer(np.ravel(sign), boundary.post)
    values = np.einsum("nij,nj->ni", flows, start)
    return values.reshape(np.shape(tau) + (el.state_dim,))


def bls_state(el: ResetElement, sinusoid: Sinusoid, t, convention: BlsConvention = "zero_ic",
              config: ResetConfig = None) -> np.ndarray:
    """Base-linear response; the convention only matters for integrators (A_r = 0)"""
    if convention not in ("zero_ic", "zero_mean"):
        raise ValueError(f"bls_convention must be 'zero_ic' or 'zero_mean', got {convention!r}")
    if not el.is_integrator:
        return sss_state(el.base, sinusoid, t, config)
    a = el.base.B[:, 0] * sinusoid.amplitude
    phase = sinusoid.omega * np.asarray(t, dtype=float)
    shape = 1.0 - np.cos(phase) if convention == "zero_ic" else -np.cos(phase)
    return np.multiply.outer(shape / sinusoid.omega, a)


def _boundaries(el: ResetElement, sinusoid: Sinusoid, config: ResetConfig):
    """(q_pre, q_post, x_bls) at the odd and even reset instants, in q* coordinates"""
    sw = element_square_wave(el, sinusoid, config)
    if el.is_integrator:
        high, low = sw.segments
        x_odd = 2.0 * el.base.B[:, 0] * sinusoid.amplitude / sinusoid.omega
        return {"odd": (high, low, x_odd), "even": (low, high, np.zeros(el.state_dim))}
    b = qstar_boundary(el, sw.peak, sinusoid.omega, config)
    return {
        "odd": (b.pre, b.post, x_bls_at_reset(el.base, sinusoid, "odd", config)),
        "even": (-b.pre, -b.post, x_bls_at_reset(el.base, sinusoid, "even", config)),
    }


def scaling_closed_form(el: ResetElement, sinusoid: Sinusoid, config: ResetConfig = None) -> np.ndarray:
    """Q = (A_rho - 1) x_bls(t_k) / (q*(t_k^+) - A_rho q*(t_k)) for first-order elements"""
    config = config or ResetConfig()
    if el.is_integrator:
        return np.eye(el.state_dim)
    if el.state_dim != 1:
        raise DimensionError(f"closed-form scaling needs a first-order element, got m={el.state_dim}")
    pre, post, x_bls = _boundaries(el, sinusoid, config)["odd"]
    rho = el.reset_matrix[0, 0]
    denominator = post[0] - rho * pre[0]
    scale = max(abs(post[0]), abs(rho * pre[0]), np.finfo(float).tiny)
    if abs(denominator) <= np.finfo(float).eps * scale:
        raise SingularMatrixError("closed-form scaling denominator q*(t_k+) - A_rho q*(t_k) vanishes")
    return np.array([[(rho - 1.0) * x_bls[0] / denominator]])


@dataclass(frozen=True, eq=False)
class ScalingFit:
    Q: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool
    method: str = "lstsq"


def scaling_lstsq(el: ResetElement, sinusoid: Sinusoid, n_samples: int = None,
                  config: ResetConfig = None) -> ScalingFit:
    """Least-squares Q over interior samples of both half-period parities

    Each sample tau in (0, pi/w) contributes the m rows of
        Q q*(t_k + tau) - e^{A_r tau} A_rho Q q*(t_k) + e^{A_r tau} (I - A_rho) x_bls(t_k) = 0
    linear in vec(Q) (column-major).
    """
    config = config or ResetConfig()
    n_samples = config.SCALING_SAMPLES_DEFAULT if n_samples is None else int(n_samples)
    m = el.state_dim
    if n_samples < m * m + 1:
        raise ValueError(f"n_samples must be >= m^2 + 1 = {m * m + 1}, got {n_samples}")

    half = sinusoid.half_period
    taus = half * np.arange(1, n_samples + 1) / (n_samples + 1)
    flows = mat_exp_stack(el.base.A, taus)
    eye = np.eye(m)
    rows, rhs = [], []
    for parity, (pre, post, x_bls) in _boundaries(el, sinusoid, config).items():
        jump_source = (eye - el.reset_matrix) @ x_bls
        for flow in flows:
            rows.append(kron_row_block(flow @ post) - kron_row_block(pre, flow @ el.reset_matrix))
            rhs.append(-flow @ jump_source)
    design = np.vstack(rows)
    fit = lstsq(design, np.concatenate(rhs), config)
    Q = fit.x.reshape(m, m, order="F")
    logger.debug(f"scaling lstsq: {design.shape[0]} rows, rank {fit.rank}, residual {fit.residual:.3e}")
    return ScalingFit(Q=Q, residual=fit.residual, rank=fit.rank, rank_deficient=fit.rank_deficient)


def jump_law_residual(el: ResetElement, sinusoid: Sinusoid, Q, config: ResetConfig = None) -> float:
    """max over parities of |Q q*(t_k+) - A_rho Q q*(t_k) - (A_rho - I) x_bls(t_k)|"""
    config = config or ResetConfig()
    Q = as_mat(Q, "Q")
    eye = np.eye(el.state_dim)
    worst = 0.0
    for pre, post, x_bls in _boundaries(el, sinusoid, config).values():
        gap = Q @ post - el.reset_matrix @ Q @ pre - (el.reset_matrix - eye) @ x_bls
        worst = max(worst, float(np.linalg.norm(gap)))
    return worst


def scaling(el: ResetElement, sinusoid: Sinusoid, n_samples: int = None, config: ResetConfig = None) -> ScalingFit:
    """Integrator -> I, first order -> closed form, otherwise least squares"""
    config = config or ResetConfig()
    m = el.state_dim
    if el.is_integrator:
        return ScalingFit(Q=np.eye(m), residual=0.0, rank=m * m, rank_deficient=False, method="identity")
    if not np.any(element_square_wave(el, sinusoid, config).peak):
        # q_i has no peak (A_rho = I): there is nothing to scale
        Q = np.eye(m)
        return ScalingFit(Q=Q, residual=jump_law_residual(el, sinusoid, Q, config), rank=m * m,
                          rank_deficient=False, method="identity")
    if m == 1:
        Q = scaling_closed_form(el, sinusoid, config)
        return ScalingFit(Q=Q, residual=jump_law_residual(el, sinusoid, Q, config), rank=1,
                          rank_deficient=False, method="closed_form")
    return scaling_lstsq(el, sinusoid, n_samples, config)


def reconstruct(el: ResetElement, sinusoid: Sinusoid, t, left_limit=None, Q=None,
                bls_convention: BlsConvention = "zero_ic", config: ResetConfig = None) -> np.ndarray:
    """Steady-state states x_bls(t) + Q q*(t)"""
    config = config or ResetConfig()
    sw = element_square_wave(el, sinusoid, config)
    Q = scaling(el, sinusoid, config=config).Q if Q is None else as_mat(Q, "Q")
    q = qstar_at(el, sw, t, left_limit, config) @ Q.T
    if el.is_integrator and bls_convention == "zero_mean":
        # the -a/w offset moves from q_i into the base-linear term
        q = q - sw.mean
    return bls_state(el, sinusoid, t, bls_convention, config) + q


@dataclass(frozen=True, eq=False)
class Decomposition:
    """One steady-state period split into base-linear and nonlinear parts"""
    omega: float
    amplitude: float
    Q: np.ndarray
    square_wave: SquareWave
    boundary: Optional[QStarBoundary]
    t: np.ndarray = field(repr=False)
    left_limit: np.ndarray = field(repr=False)
    qstar: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    x_bls: np.ndarray = field(repr=False)
    residual: float = 0.0
    jump_residual: float = 0.0
    method: str = "lstsq"

    @property
    def x_recon(self) -> np.ndarray:
        return self.x_bls + self.q


def period_grid(omega: float, samples_per_period: int, t0: float = 0.0):
    """Simulator-style layout of one period: (times, left_limit flags)"""
    if samples_per_period < 2 or samples_per_period % 2:
        raise ValueError(f"samples_per_period must be an even number >= 2, got {samples_per_period}")
    n = samples_per_period // 2
    half = np.pi / omega
    offsets = np.arange(n + 1) * (half / n)
    t = np.concatenate([t0 + offsets, t0 + half + offsets])
    left = np.zeros(t.shape, dtype=bool)
    left[n] = left[-1] = True
    return t, left


def decompose(el: ResetElement, sinusoid: Sinusoid, times=None, left_limit=None,
              samples_per_period: int = None, n_samples: int = None,
              config: ResetConfig = None) -> Decomposition:
    config = config or ResetConfig()
    if times is None:
        spp = config.SAMPLES_PER_PERIOD_DEFAULT if samples_per_period is None else samples_per_period
        times, left_limit = period_grid(sinusoid.omega, spp)
    times = np.asarray(times, dtype=float).reshape(-1)
    left = np.zeros(times.shape, dtype=bool) if left_limit is None else np.asarray(left_limit, dtype=bool)

    # 1. Nonlinearity of the reset integrator
    sw = element_square_wave(el, sinusoid, config)
    boundary = None if el.is_integrator else qstar_boundary(el, sw.peak, sinusoid.omega, config)
    # 2. Scaling
    fit = scaling(el, sinusoid, n_samples, config)
    # 3. Assemble over the grid
    qstar = qstar_at(el, sw, times, left, config)
    q = qstar @ fit.Q.T
    x_bls = bls_state(el, sinusoid, times, "zero_ic", config)
    jump = jump_law_residual(el, sinusoid, fit.Q, config)
    logger.info(f"decomposition at w={sinusoid.omega:g} rad/s: Q via {fit.method}, "
                f"residual {fit.residual:.3e}, jump-law residual {jump:.3e}")
    return Decomposition(
        omega=sinusoid.omega, amplitude=sinusoid.amplitude, Q=fit.Q, square_wave=sw, boundary=boundary,
        t=times, left_limit=left, qstar=qstar, q=q, x_bls=x_bls,
        residual=fit.residual, jump_residual=jump, method=fit.method,
    )
