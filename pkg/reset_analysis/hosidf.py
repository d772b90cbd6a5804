"""
Higher-order sinusoidal-input describing functions of reset elements.

Closed form, at unit input amplitude:
    q_k  = (4 / (k pi)) C_r Q (jkw I - A_r)^{-1} jkw q_hat      (odd k, 0 for even k)
    H_1  = C_r (jw I - A_r)^{-1} B_r + D_r + q_1
    H_k  = q_k                                                   (k >= 2)
Complex values follow the HarmonicSet convention (real part = sin component).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy.integrate import simpson

from .config import ResetConfig
from .decomposition import bls_state, element_square_wave, reconstruct, scaling
from .errors import ConvergenceGateError, ResetAnalysisError
from .lti import Sinusoid, freq_response
from .matkit import solve_c
from .reset_core import ConvergenceReport, ResetElement, check_convergence
from .simulator import SimTrace, measure_harmonics, simulate_steady_state


def _check_order(k: int) -> int:
    if int(k) != k or k < 1:
        raise ValueError(f"harmonic order k must be an integer >= 1, got {k}")
    return int(k)


def q_harmonic(el: ResetElement, Q, peak, k: int, omega: float, config: ResetConfig = None) -> complex:
    """k-th harmonic of the nonlinear contribution, at the amplitude q_hat was computed for"""
    k = _check_order(k)
    if k % 2 == 0:
        return 0j
    m = el.state_dim
    s = 1j * k * omega
    shaped = solve_c(s * np.eye(m) - el.base.A, s * np.asarray(peak, dtype=complex).reshape(-1), config)
    return complex(4.0 / (k * np.pi) * (el.base.C @ (np.asarray(Q) @ shaped))[0])


def gate(el: ResetElement, omega: Optional[float] = None, enforce: bool = True,
         config: ResetConfig = None) -> ConvergenceReport:
    """Run check_convergence; raise when it fails and enforce is set, warn otherwise"""
    report = check_convergence(el, omega=omega, config=config)
    if not report.passed:
        if enforce:
            raise ConvergenceGateError(report.summary(), report)
        logger.warning(f"continuing despite failed gate: {report.summary()}")
    return report


@dataclass(frozen=True, eq=False)
class _Point:
    G: complex
    Q: np.ndarray
    peak: np.ndarray
    H: np.ndarray
    q: np.ndarray


def _closed_form_point(el: ResetElement, omega: float, K: int, amplitude: float = 1.0,
                       q_scale: float = 1.0, config: ResetConfig = None) -> _Point:
    sinusoid = Sinusoid(amplitude, omega)
    G = freq_response(el.base, 1j * omega, config)
    Q = scaling(el, sinusoid, config=config).Q * q_scale
    peak = element_square_wave(el, sinusoid, config).peak
    q = np.array([q_harmonic(el, Q, peak, k, omega, config) for k in range(1, K + 1)]) / amplitude
    H = q.copy()
    H[0] += G
    return _Point(G=G, Q=Q, peak=peak / amplitude, H=H, q=q)


def hosidf(el: ResetElement, k: int, omega: float, amplitude: float = 1.0, enforce_convergence: bool = True,
           q_scale: float = 1.0, config: ResetConfig = None) -> complex:
    """H_k(w); any amplitude > 0 gives the same value up to rounding"""
    k = _check_order(k)
    if not amplitude > 0:
        raise ValueError(f"amplitude must be > 0, got {amplitude}")
    gate(el, omega, enforce_convergence, config)
    return complex(_closed_form_point(el, omega, k, amplitude, q_scale, config).H[k - 1])


@dataclass(frozen=True, eq=False)
class HosidfTable:
    """Closed-form H_k and q_k over a frequency grid; failed points are NaN with errors[i] set"""
    omegas: np.ndarray
    orders: np.ndarray
    H: np.ndarray
    q: np.ndarray
    G: np.ndarray
    Q: List[np.ndarray] = field(repr=False)
    peaks: List[np.ndarray] = field(repr=False)
    errors: List[Optional[str]] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.orders)

    @property
    def failed(self) -> List[int]:
        return [i for i, err in enumerate(self.errors) if err]

    def to_frame(self) -> pd.DataFrame:
        """Long format: per w the K closed-form rows, then one bls row"""
        rows = []
        for i, omega in enumerate(self.omegas):
            for j, k in enumerate(self.orders):
                rows.append((omega, int(k), self.H[i, j], "closed_form"))
            rows.append((omega, 1, self.G[i], "bls"))
        values = np.array([r[2] for r in rows], dtype=complex)
        mag = np.abs(values)
        with np.errstate(divide="ignore"):
            mag_db = 20.0 * np.log10(mag)
        phase = np.degrees(np.angle(values))
        phase = np.where(phase <= -180.0, phase + 360.0, phase)
        return pd.DataFrame({
            "omega_rad_s": [r[0] for r in rows],
            "k": [r[1] for r in rows],
            "re": values.real + 0.0,
            "im": values.imag + 0.0,
            "mag": mag,
            "mag_db": mag_db,
            "phase_deg": phase + 0.0,
            "source": [r[3] for r in rows],
        })


def sweep(el: ResetElement, omegas: Sequence[float], K: int, jobs: int = 1, enforce_convergence: bool = True,
          config: ResetConfig = None) -> HosidfTable:
    """HOSIDF over a frequency grid; per-point numerical failures do not abort the sweep"""
    config = config or ResetConfig()
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    K = _check_order(K)
    if omegas.size == 0:
        raise ValueError("frequency grid is empty")
    if np.any(~np.isfinite(omegas)) or np.any(omegas <= 0):
        raise ValueError("frequencies must be finite and > 0")
    gate(el, float(omegas.min()), enforce_convergence, config)

    def point(omega: float):
        try:
            return _closed_form_point(el, omega, K, config=config), None
        except ResetAnalysisError as exc:
            logger.warning(f"sweep point w={omega:g} rad/s failed: {exc}")
            return None, str(exc)

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(point, omegas))

    n, m = len(omegas), el.state_dim
    H = np.full((n, K), np.nan + 1j * np.nan)
    q = np.full((n, K), np.nan + 1j * np.nan)
    G = np.full(n, np.nan + 1j * np.nan)
    Qs, peaks, errors = [], [], []
    for i, (res, err) in enumerate(results):
        errors.append(err)
        if res is None:
            Qs.append(np.full((m, m), np.nan))
            peaks.append(np.full(m, np.nan))
            continue
        H[i], q[i], G[i] = res.H, res.q, res.G
        Qs.append(res.Q)
        peaks.append(res.peak)
    logger.info(f"sweep: {n} frequencies, K={K}, {sum(e is not None for e in errors)} failed")
    return HosidfTable(omegas=omegas, orders=np.arange(1, K + 1), H=H, q=q, G=G, Q=Qs, peaks=peaks, errors=errors)


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """Closed form vs simulated harmonics at one frequency

    Where H_k != 0 the error is |H_k - c_k/b| / |H_k|; where the closed form is
    exactly 0 (every even k, and odd k >= 3 when A_rho = I) it is |c_k| / |c_1|.
    """
    omega: float
    orders: np.ndarray
    closed_form: np.ndarray
    simulated: np.ndarray
    rel_error: np.ndarray
    periods_to_converge: Optional[int] = None

    @property
    def max_error(self) -> float:
        return float(np.max(self.rel_error))

    def passed(self, tol: float) -> bool:
        return bool(self.max_error < tol)


def validate(el: ResetElement, omega: float, K: int, amplitude: float = 1.0, n_periods: int = None,
             samples_per_period: int = None, q_scale: float = 1.0, enforce_convergence: bool = True,
             config: ResetConfig = None) -> ValidationReport:
    config = config or ResetConfig()
    K = _check_order(K)
    gate(el, omega, enforce_convergence, config)
    # 1. Closed form
    closed = _closed_form_point(el, omega, K, q_scale=q_scale, config=config).H
    # 2. Simulation oracle
    sinusoid = Sinusoid(amplitude, omega)
    window = simulate_steady_state(el, sinusoid, n_periods, samples_per_period, config=config)
    simulated = measure_harmonics(window, K).coefficients[1:] / amplitude
    # 3. Compare
    orders = np.arange(1, K + 1)
    # orders whose closed form is exactly zero are measured against |c_1|
    relative = closed != 0
    err = np.empty(K)
    err[relative] = np.abs(closed[relative] - simulated[relative]) / np.abs(closed[relative])
    err[~relative] = np.abs(simulated[~relative]) / np.abs(simulated[0])
    logger.info(f"validate w={omega:g} rad/s: max relative error {err.max():.3e}")
    return ValidationReport(omega=float(omega), orders=orders, closed_form=closed, simulated=simulated,
                            rel_error=err, periods_to_converge=window.periods_to_converge)


def partial_fourier_q(el: ResetElement, sinusoid: Sinusoid, k_max: int, t, Q=None,
                      config: ResetConfig = None) -> np.ndarray:
    """Output-level nonlinearity C_r q(t) rebuilt from its odd harmonics up to k_max"""
    k_max = _check_order(k_max)
    if k_max % 2 == 0:
        raise ValueError(f"k_max must be odd, got {k_max}")
    sw = element_square_wave(el, sinusoid, config)
    Q = scaling(el, sinusoid, config=config).Q if Q is None else np.asarray(Q, dtype=float)
    t = np.asarray(t, dtype=float)
    # T_q blocks DC unless A_r = 0, where q = q_i keeps its mean
    signal = np.full(t.shape, float(el.base.C[0] @ Q @ sw.mean) if el.is_integrator else 0.0)
    for k in range(1, k_max + 1, 2):
        c = q_harmonic(el, Q, sw.peak, k, sinusoid.omega, config)
        phase = k * sinusoid.omega * t
        signal = signal + c.real * np.sin(phase) + c.imag * np.cos(phase)
    return signal


def nonlinear_output(el: ResetElement, sinusoid: Sinusoid, t, left_limit=None, config: ResetConfig = None) -> np.ndarray:
    """C_r q(t) from the time-domain decomposition"""
    states = reconstruct(el, sinusoid, t, left_limit, config=config)
    return (states - bls_state(el, sinusoid, t, config=config)) @ el.base.C[0]


def harmonic_decay(el: ResetElement, omega: float, K: int, config: ResetConfig = None) -> Tuple[np.ndarray, np.ndarray]:
    """(odd k, k |q_k|); constant in k for the reset integrator"""
    K = _check_order(K)
    point = _closed_form_point(el, omega, K, config=config)
    orders = np.arange(1, K + 1, 2)
    return orders, orders * np.abs(point.q[orders - 1])


@dataclass(frozen=True)
class ParsevalReport:
    harmonic_power: float
    signal_power: float

    @property
    def ratio(self) -> float:
        return self.harmonic_power / self.signal_power if self.signal_power else 0.0


def parseval_check(window: SimTrace, K: int) -> ParsevalReport:
    """Power in harmonics 0..K against the mean square of y over the period"""
    harmonics = measure_harmonics(window, K)
    c = harmonics.coefficients
    harmonic_power = harmonics.mean ** 2 + float(np.sum(np.abs(c[1:]) ** 2)) / 2.0
    energy = sum(simpson(values ** 2, x=times) for times, values in window.segments(window.y))
    signal_power = float(energy) * window.omega / (2.0 * np.pi)
    return ParsevalReport(harmonic_power=harmonic_power, signal_power=signal_power)
