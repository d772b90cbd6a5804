"""
Event-driven hybrid simulation of reset elements under sinusoidal input.

Resets for b*sin(wt) happen at the analytic zeros t_k = k*pi/w, so the only
numerical error left in a trace is floating point: flow between resets is
exact (see lti.Propagator).  Harmonics are extracted by composite Simpson
quadrature split at the reset instants.
"""
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq

from .config import ResetConfig
from .errors import AliasingError, SteadyStateNotReached
from .lti import Propagator, Sinusoid, output
from .matkit import solve
from .reset_core import ResetElement, apply_reset


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Sampled trajectory laid out per half-period

    Half-period k covers [t_k, t_{k+1}] with samples at offsets
    tau_j = j*pi/(w*n), j = 0..n.  Sample j = 0 is the post-reset value at
    t_k (flagged in ``post_reset`` when the reset fired), sample j = n is the
    pre-reset value at t_{k+1}.
    """
    omega: float
    amplitude: float
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    x: np.ndarray
    post_reset: np.ndarray
    segment: np.ndarray
    offset: np.ndarray
    reset_times: np.ndarray
    samples_per_half: int
    periods_to_converge: Optional[int] = None

    @property
    def state_dim(self) -> int:
        return self.x.shape[1]

    @property
    def n_segments(self) -> int:
        return len(self.t) // (self.samples_per_half + 1)

    @property
    def n_periods(self) -> int:
        return self.n_segments // 2

    @property
    def segment_end(self) -> np.ndarray:
        """True on the pre-reset sample closing each half-period"""
        return (np.arange(len(self.t)) % (self.samples_per_half + 1)) == self.samples_per_half

    def segments(self, values: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(times, values) per half-period, boundaries included on both sides"""
        size = self.samples_per_half + 1
        return [(self.t[i:i + size], values[i:i + size]) for i in range(0, len(self.t), size)]

    def select_segments(self, start: int, stop: int) -> "SimTrace":
        size = self.samples_per_half + 1
        sl = slice(start * size, stop * size)
        t0, t1 = self.t[sl][0], self.t[sl][-1]
        resets = self.reset_times[(self.reset_times >= t0 - 1e-15) & (self.reset_times <= t1)]
        return replace(self, t=self.t[sl], u=self.u[sl], y=self.y[sl], x=self.x[sl],
                       post_reset=self.post_reset[sl], segment=self.segment[sl],
                       offset=self.offset[sl], reset_times=resets)


@dataclass(frozen=True, eq=False)
class HarmonicSet:
    """Fourier coefficients c_k, k = 0..K

    y(t) = Im(c_0) + sum_k [Re(c_k) sin(k w t) + Im(c_k) cos(k w t)], so an
    LTI system G driven by b sin(wt) has c_1 = G(jw) b.
    """
    omega: float
    coefficients: np.ndarray

    @property
    def K(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, k: int) -> complex:
        return complex(self.coefficients[k])

    @property
    def mean(self) -> float:
        return float(self.coefficients[0].imag)


def _check_samples(samples_per_period: int) -> int:
    if samples_per_period < 4 or samples_per_period % 4:
        raise ValueError(f"samples_per_period must be a positive multiple of 4, got {samples_per_period}")
    return samples_per_period // 2


def periodic_reset_state(el: ResetElement, sinusoid: Sinusoid, config: ResetConfig = None) -> np.ndarray:
    """Steady-state pre-reset state x(t_{2n}) from the half-wave antisymmetric fixed point

    With p = x(t_{2n}^+) and f the forced response over one positive half-period,
    A_rho (Phi p + f) = -p, hence p = -(I + A_rho Phi)^{-1} A_rho f.
    """
    config = config or ResetConfig()
    m = el.state_dim
    prop = Propagator(el.base, sinusoid, [0.0, sinusoid.half_period], config)
    phi = prop.advance(np.zeros(m), 0.0)  # forced part only
    f = phi[-1]
    transition = np.column_stack([prop.advance(e, 0.0)[-1] - f for e in np.eye(m)])
    p = -solve(np.eye(m) + el.reset_matrix @ transition, el.reset_matrix @ f, config)
    return -(transition @ p + f)


def simulate(el: ResetElement, sinusoid: Sinusoid, n_periods: int = None, samples_per_period: int = None,
             x0: Union[None, str, np.ndarray] = None, config: ResetConfig = None) -> SimTrace:
    """Exact hybrid trajectory over n_periods, resets at k*pi/w gated by delta_m"""
    config = config or ResetConfig()
    n_periods = config.N_PERIODS_DEFAULT if n_periods is None else int(n_periods)
    samples_per_period = config.SAMPLES_PER_PERIOD_DEFAULT if samples_per_period is None else int(samples_per_period)
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    n = _check_samples(samples_per_period)
    m = el.state_dim

    if x0 is None:
        x = np.zeros(m)
    elif isinstance(x0, str):
        if x0 == "zero":
            x = np.zeros(m)
        elif x0 == "periodic":
            x = periodic_reset_state(el, sinusoid, config)
        else:
            raise ValueError(f"x0 must be 'zero', 'periodic' or a state vector, got {x0!r}")
    else:
        x = np.asarray(x0, dtype=float).reshape(m)

    half = sinusoid.half_period
    taus = np.arange(n + 1) * (half / n)
    prop = Propagator(el.base, sinusoid, taus, config)

    n_segments = 2 * n_periods
    size = n + 1
    t = np.empty(n_segments * size)
    xs = np.empty((n_segments * size, m))
    post = np.zeros(n_segments * size, dtype=bool)
    segment = np.repeat(np.arange(n_segments), size)
    offset = np.tile(taus, n_segments)
    resets = []
    last_reset = -np.inf
    gap_slack = 1e-12 * sinusoid.period

    for k in range(n_segments):
        t_k = k * half
        # 1. Reset law, blocked while the regularization interval has not elapsed
        if t_k - last_reset + gap_slack >= el.delta_m:
            x = apply_reset(el, x)
            last_reset = t_k
            resets.append(t_k)
            post[k * size] = True
        # 2. Exact flow to the next zero crossing
        states = prop.advance(x, t_k)
        t[k * size:(k + 1) * size] = t_k + taus
        xs[k * size:(k + 1) * size] = states
        x = states[-1]

    u = sinusoid(t)
    y = output(el.base, xs, u)
    logger.debug(f"simulated {n_periods} periods at w={sinusoid.omega:g} rad/s, {len(resets)} resets")
    return SimTrace(
        omega=sinusoid.omega, amplitude=sinusoid.amplitude, t=t, u=u, y=y, x=xs,
        post_reset=post, segment=segment, offset=offset, reset_times=np.asarray(resets),
        samples_per_half=n,
    )


def _period_block(trace: SimTrace, p: int) -> np.ndarray:
    size = trace.samples_per_half + 1
    return trace.x[2 * p * size:(2 * p + 2) * size]


def steady_state_window(trace: SimTrace, tol: float = None, config: ResetConfig = None) -> SimTrace:
    """Last full period, once it agrees with the previous one to tol (relative sup norm)"""
    config = config or ResetConfig()
    tol = config.STEADY_STATE_TOL if tol is None else tol
    if trace.n_periods < 2:
        raise ValueError("steady_state_window needs a trace of at least 2 periods")

    diffs = []
    for p in range(1, trace.n_periods):
        current = _period_block(trace, p)
        diff = float(np.max(np.abs(current - _period_block(trace, p - 1))))
        scale = float(np.max(np.abs(current)))
        diffs.append(diff <= tol * scale if scale > 0 else diff == 0.0)

    if not diffs[-1]:
        raise SteadyStateNotReached(
            f"no steady state within {trace.n_periods} periods at w={trace.omega:g} rad/s (tol {tol:g})")
    settled = len(diffs)
    while settled > 0 and diffs[settled - 1]:
        settled -= 1
    periods = settled + 1
    logger.debug(f"steady state after {periods} periods at w={trace.omega:g} rad/s")
    window = trace.select_segments(trace.n_segments - 2, trace.n_segments)
    return replace(window, periods_to_converge=periods)


def simulate_steady_state(el: ResetElement, sinusoid: Sinusoid, n_periods: int = None,
                          samples_per_period: int = None, tol: float = None,
                          config: ResetConfig = None) -> SimTrace:
    """simulate + steady_state_window, doubling the horizon until the window settles"""
    config = config or ResetConfig()
    n_periods = config.N_PERIODS_DEFAULT if n_periods is None else n_periods
    while True:
        trace = simulate(el, sinusoid, n_periods, samples_per_period, config=config)
        try:
            return steady_state_window(trace, tol, config)
        except SteadyStateNotReached:
            if n_periods * 2 > config.MAX_PERIODS:
                raise
            n_periods *= 2
            logger.info(f"extending simulation to {n_periods} periods at w={sinusoid.omega:g} rad/s")


def fourier_coefficients(pieces: Sequence[Tuple[np.ndarray, np.ndarray]], omega: float, K: int) -> np.ndarray:
    """Coefficients c_0..c_K of one period given as smooth pieces (Simpson per piece)"""
    orders = np.arange(K + 1)
    sin_part = np.zeros(K + 1)
    cos_part = np.zeros(K + 1)
    for times, values in pieces:
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        phase = omega * np.multiply.outer(orders, times)
        sin_part += simpson(values * np.sin(phase), x=times, axis=-1)
        cos_part += simpson(values * np.cos(phase), x=times, axis=-1)
    scale = omega / np.pi
    coefficients = scale * sin_part + 1j * scale * cos_part
    coefficients[0] = 1j * cos_part[0] * omega / (2.0 * np.pi)
    return coefficients


def measure_harmonics(window: SimTrace, K: int, signal: Union[str, int] = "y") -> HarmonicSet:
    """Harmonics of a one-period window; signal is 'y', 'u' or a state index"""
    if window.n_segments != 2:
        raise ValueError(f"measure_harmonics needs a one-period window, got {window.n_segments} half-periods")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K >= window.samples_per_half:  # samples per period / 2
        raise AliasingError(f"K={K} is not resolvable with {2 * window.samples_per_half} samples per period")
    if signal == "y":
        values = window.y
    elif signal == "u":
        values = window.u
    else:
        values = window.x[:, int(signal)]
    return HarmonicSet(window.omega, fourier_coefficients(window.segments(values), window.omega, K))


@dataclass(frozen=True, eq=False)
class EventTrace:
    """Trajectory from the general-input fallback"""
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    reset_times: np.ndarray


def simulate_general(el: ResetElement, u: Callable[[float], float], t_end: float, dt: float,
                     x0=None, config: ResetConfig = None) -> EventTrace:
    """Fixed-step propagation for arbitrary inputs, resets at bracketed zero crossings of u"""
    config = config or ResetConfig()
    if not (t_end > 0 and dt > 0):
        raise ValueError("t_end and dt must be > 0")
    A, b = el.base.A, el.base.B[:, 0]
    m = el.state_dim

    def flow(t0, t1, x_start):
        if t1 <= t0:
            return x_start
        sol = solve_ivp(lambda t, x: A @ x + b * u(t), (t0, t1), x_start,
                        method="DOP853", rtol=1e-12, atol=1e-14)
        return sol.y[:, -1]

    t = 0.0
    x = np.zeros(m) if x0 is None else np.asarray(x0, dtype=float).reshape(m)
    last_reset = -np.inf
    resets = []
    times, states = [], []
    if u(0.0) == 0.0:
        x = apply_reset(el, x)
        last_reset = 0.0
        resets.append(0.0)
    times.append(t)
    states.append(x)

    while t < t_end - 1e-15:
        t_next = min(t + dt, t_end)
        u0, u1 = u(t), u(t_next)
        crossing = None
        if u0 * u1 < 0:
            crossing = brentq(u, t, t_next, xtol=config.EVENT_XTOL)
        elif u1 == 0.0:
            crossing = t_next
        if crossing is not None and crossing - last_reset >= el.delta_m:
            x = apply_reset(el, flow(t, crossing, x))
            last_reset = crossing
            resets.append(crossing)
            x = flow(crossing, t_next, x)
        else:
            x = flow(t, t_next, x)
        t = t_next
        times.append(t)
        states.append(x)

    t_arr = np.asarray(times)
    x_arr = np.asarray(states)
    u_arr = np.array([u(s) for s in t_arr])
    return EventTrace(t=t_arr, x=x_arr, u=u_arr, y=output(el.base, x_arr, u_arr), reset_times=np.asarray(resets))
