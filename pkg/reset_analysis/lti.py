"""
Linear time-invariant state-space responses under sinusoidal forcing.
Steady states and interval propagation are closed form (no time stepping).
"""
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .config import ResetConfig
from .errors import DimensionError, NotHurwitzError, SingularMatrixError
from .matkit import as_mat, eigenvalues, mat_exp_stack, solve, solve_c

Parity = Literal["odd", "even"]


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Dense real quadruple (A, B, C, D)"""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = as_mat(self.A, "A")
        m = A.shape[0]
        if A.shape != (m, m):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = as_mat(self.B, "B")
        if B.shape[0] != m and B.shape == (1, m):
            B = B.T
        C = as_mat(self.C, "C")
        D = as_mat(self.D, "D")
        if B.shape[0] != m:
            raise DimensionError(f"B must have {m} rows, got {B.shape}")
        if C.shape[1] != m:
            raise DimensionError(f"C must have {m} columns, got {C.shape}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionError(f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        for name, value in (("A", A), ("B", B), ("C", C), ("D", D)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def is_siso(self) -> bool:
        return self.B.shape[1] == 1 and self.C.shape[0] == 1


@dataclass(frozen=True)
class Sinusoid:
    """u(t) = amplitude * sin(omega * t), phase zero"""
    amplitude: float
    omega: float

    def __post_init__(self):
        if not np.isfinite(self.omega) or self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        # amplitude 0 is accepted as the free-motion case of propagate_interval
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def half_period(self) -> float:
        return np.pi / self.omega

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float))


def poles(ss: StateSpace) -> np.ndarray:
    return eigenvalues(ss.A)


def is_hurwitz(ss: StateSpace) -> bool:
    """True when every eigenvalue of A has a strictly negative real part"""
    return bool(np.all(poles(ss).real < 0))


def _require_hurwitz(ss: StateSpace) -> None:
    if not is_hurwitz(ss):
        raise NotHurwitzError(f"base system is not Hurwitz (poles {np.round(poles(ss), 6)})")


def freq_response(ss: StateSpace, s: complex, config: ResetConfig = None):
    """C (sI - A)^{-1} B + D; a complex scalar for SISO systems"""
    m = ss.state_dim
    G = ss.C @ solve_c(s * np.eye(m) - ss.A, ss.B.astype(complex), config) + ss.D
    return complex(G[0, 0]) if G.shape == (1, 1) else G


def dc_gain(ss: StateSpace, config: ResetConfig = None):
    """-C A^{-1} B + D for invertible A"""
    G = -ss.C @ solve(ss.A, ss.B, config) + ss.D
    return float(G[0, 0]) if G.shape == (1, 1) else G


def output(ss: StateSpace, x, u) -> np.ndarray:
    """y = C x + D u for a single state (m,) or a trajectory (N, m)"""
    x = np.asarray(x, dtype=float)
    return x @ ss.C[0] + ss.D[0, 0] * np.asarray(u, dtype=float)


def _input_column(ss: StateSpace) -> np.ndarray:
    if ss.B.shape[1] != 1:
        raise DimensionError("sinusoidal forcing needs a single-input system")
    return ss.B[:, 0]


def sinusoid_phasor(ss: StateSpace, sinusoid: Sinusoid, config: ResetConfig = None) -> np.ndarray:
    """(j w I - A)^{-1} B b; the particular solution is Im(phasor * e^{j w t})"""
    m = ss.state_dim
    return solve_c(1j * sinusoid.omega * np.eye(m) - ss.A, _input_column(ss) * sinusoid.amplitude, config)


def _phasor_trajectory(phasor: np.ndarray, omega: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    rot = np.exp(1j * omega * t)
    return np.imag(np.multiply.outer(rot, phasor))


def sss_state(ss: StateSpace, sinusoid: Sinusoid, t, config: ResetConfig = None) -> np.ndarray:
    """Sinusoidal steady state x_ss(t) = Im[(j w I - A)^{-1} B b e^{j w t}]; shape (m,) or (N, m)"""
    _require_hurwitz(ss)
    return _phasor_trajectory(sinusoid_phasor(ss, sinusoid, config), sinusoid.omega, t)


def x_bls_at_reset(ss: StateSpace, sinusoid: Sinusoid, parity: Parity, config: ResetConfig = None) -> np.ndarray:
    """Base-linear steady state at a reset instant: +/-(A^2 + w^2 I)^{-1} B b w"""
    _require_hurwitz(ss)
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    w = sinusoid.omega
    value = solve(ss.A @ ss.A + w * w * np.eye(ss.state_dim), _input_column(ss), config) * sinusoid.amplitude * w
    return value if parity == "odd" else -value


def integrator_bls(sinusoid: Sinusoid, t, m: int = 1) -> np.ndarray:
    """Zero-initial-condition integrator response (b/w)(1 - cos wt), replicated over m states"""
    t = np.asarray(t, dtype=float)
    per_state = sinusoid.amplitude / sinusoid.omega * (1.0 - np.cos(sinusoid.omega * t))
    return np.multiply.outer(per_state, np.ones(m))


class Propagator:
    """Exact flow of x' = A x + B b sin(wt) over a fixed set of offsets

    The transition matrices e^{A tau} are computed once; each call to
    ``advance`` is then a batched mat-vec.  When j*w is an eigenvalue of A the
    particular solution does not exist and the sinusoid generator is folded
    into an augmented matrix exponential instead.
    """

    def __init__(self, ss: StateSpace, sinusoid: Sinusoid, offsets, config: ResetConfig = None):
        self.config = config or ResetConfig()
        self.ss = ss
        self.sinusoid = sinusoid
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if np.any(self.offsets < 0):
            raise ValueError("propagation offsets must be >= 0")
        self.b = _input_column(ss)
        try:
            self.phasor = sinusoid_phasor(ss, sinusoid, self.config)
            self.transitions = mat_exp_stack(ss.A, self.offsets)
            self.rotations = np.exp(1j * sinusoid.omega * self.offsets)
            self.augmented = None
        except SingularMatrixError:
            self.phasor = None
            self.augmented = mat_exp_stack(self._generator(), self.offsets)

    def _generator(self) -> np.ndarray:
        # z = [x; b sin(wt); b cos(wt)]
        m = self.ss.state_dim
        w = self.sinusoid.omega
        M = np.zeros((m + 2, m + 2))
        M[:m, :m] = self.ss.A
        M[:m, m] = self.b
        M[m, m + 1] = w
        M[m + 1, m] = -w
        return M

    def advance(self, x0, t0: float) -> np.ndarray:
        """States at t0 + offsets starting from x(t0) = x0; shape (len(offsets), m)"""
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape[0] != self.ss.state_dim:
            raise DimensionError(f"x0 has {x0.shape[0]} entries, expected {self.ss.state_dim}")
        if self.augmented is None:
            start = self.phasor * np.exp(1j * self.sinusoid.omega * t0)
            particular = np.imag(np.multiply.outer(self.rotations, start))
            homogeneous = self.transitions @ (x0 - np.imag(start))
            return particular + homogeneous
        b, w = self.sinusoid.amplitude, self.sinusoid.omega
        z0 = np.concatenate([x0, [b * np.sin(w * t0), b * np.cos(w * t0)]])
        return (self.augmented @ z0)[:, : self.ss.state_dim]


def propagate_interval(ss: StateSpace, x0, sinusoid: Sinusoid, t0: float, delta: float,
                       config: ResetConfig = None) -> np.ndarray:
    """Exact x(t0 + delta) from x(t0) = x0 under u = b sin(wt)"""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    return Propagator(ss, sinusoid, [delta], config).advance(x0, t0)[-1]


def propagate_constant(ss: StateSpace, x0, u, delta: float) -> np.ndarray:
    """Exact x(delta) under a constant (vector) input u, via the block matrix exponential"""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    m, p = ss.state_dim, ss.B.shape[1]
    # M = [A  B]
    #     [0  0]
    M = np.zeros((m + p, m + p))
    M[:m, :m] = ss.A
    M[:m, m:] = ss.B
    phi = mat_exp_stack(M, [delta])[0]
    return phi[:m, :m] @ x0 + phi[:m, m:] @ u
