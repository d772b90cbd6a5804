"""Tests for reset_analysis/decomposition.py."""
import numpy as np
import pytest
from loguru import logger
from numpy.testing import assert_allclose
from scipy.integrate import simpson

from reset_analysis.decomposition import (bls_state, decompose, element_square_wave, jump_law_residual,
                                          period_grid, qstar_at, qstar_boundary, reconstruct, scaling,
                                          scaling_closed_form, scaling_lstsq, square_wave)
from reset_analysis.errors import DimensionError, SingularMatrixError
from reset_analysis.lti import Sinusoid, propagate_constant
from reset_analysis.reset_core import make_custom, make_fore, make_integrator, shaping_system
from reset_analysis.simulator import simulate_steady_state


def _shaping_oracle(el, sw, periods=50):
    """T_q driven by the square wave from rest; state x_q at t_{2P} after P periods"""
    ss = shaping_system(el)
    high, low = sw.segments
    x_q = np.zeros(el.state_dim)
    for _ in range(periods):
        x_q = propagate_constant(ss, x_q, high, np.pi / sw.omega)
        x_q = propagate_constant(ss, x_q, low, np.pi / sw.omega)
    return ss, x_q


class TestSquareWave:
    def test_clegg_values(self):
        sw = square_wave(0.0, 1.0, 100.0)
        assert_allclose(sw.mean, [-0.01])
        assert_allclose(sw.peak, [0.01])
        assert_allclose(np.ravel(sw.segments), [0.0, -0.02], atol=1e-18)

    def test_partial_reset_values(self):
        sw = square_wave(0.5, 1.0, 1.0)
        assert_allclose(sw.peak, [1.0 / 3.0])
        assert_allclose(sw.mean, [-1.0])
        assert_allclose(np.ravel(sw.segments), [-2.0 / 3.0, -4.0 / 3.0])

    def test_segment_parity(self):
        sw = square_wave(0.0, 1.0, 1.0)
        values = sw.value([0.0, 1.0, np.pi, 4.0, 2 * np.pi], left_limit=[False, False, False, False, True])
        assert_allclose(values[:, 0], [0.0, 0.0, -2.0, -2.0, -2.0])

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            square_wave(-1.0, 1.0, 1.0)

    def test_matrix_reset(self):
        sw = square_wave(np.diag([0.0, 0.5]), [1.0, 1.0], 2.0)
        assert_allclose(sw.peak, [0.5, 1.0 / 6.0])

    def test_no_steady_state_warning_for_hurwitz_elements(self, drive_100):
        messages = []
        logger.add(messages.append, level="WARNING")
        element_square_wave(make_fore(100.0, 1.0), drive_100)
        assert messages == []
        element_square_wave(make_integrator(1, 1.0), drive_100)
        assert len(messages) == 1

    def test_fourier_series(self):
        sw = square_wave(0.25, 2.0, 3.0)
        t, left = period_grid(3.0, 8192)
        n = 4096
        values = sw.value(t, left)[:, 0] - sw.mean[0]
        phase = np.multiply.outer(np.arange(1, 20), 3.0 * t)
        pieces = [slice(0, n + 1), slice(n + 1, 2 * n + 2)]
        sin_coef = sum(simpson(values[p] * np.sin(phase[:, p]), x=t[p], axis=-1) for p in pieces) * 3.0 / np.pi
        odd = np.arange(1, 20, 2)
        assert_allclose(sin_coef[odd - 1], 4.0 * sw.peak[0] / (odd * np.pi), atol=1e-10)
        even = np.arange(2, 20, 2)
        assert np.max(np.abs(sin_coef[even - 1])) < 1e-10


class TestQStar:
    def test_integrator_limit(self):
        b = qstar_boundary(make_integrator(1), [0.3], 5.0)
        assert_allclose(b.x_q, [0.0], atol=1e-16)
        assert_allclose(b.pre, [0.3])
        assert_allclose(b.post, [-0.3])

    def test_fast_limit(self):
        b = qstar_boundary(make_fore(1e3), [0.3], 1.0)
        assert_allclose(b.x_q, [-0.3])
        assert_allclose(b.pre, [0.0], atol=1e-15)
        assert_allclose(b.post, [-0.6])

    def test_boundary_against_propagation(self, fore):
        sw = square_wave(fore.reset_matrix, fore.base.B[:, 0], 100.0)
        ss, x_q = _shaping_oracle(fore, sw)
        high, low = sw.segments
        x_q_odd = propagate_constant(ss, x_q, high, np.pi / 100.0)
        b = qstar_boundary(fore, sw.peak, 100.0)
        assert_allclose(x_q_odd + high, b.pre, atol=1e-9)
        assert_allclose(x_q_odd + low, b.post, atol=1e-9)

    def test_qstar_at_against_propagation(self, fore):
        sw = square_wave(fore.reset_matrix, fore.base.B[:, 0], 100.0)
        ss, x_q = _shaping_oracle(fore, sw)
        high, low = sw.segments
        half = np.pi / 100.0
        taus = np.linspace(0.0, half, 9)[1:-1]
        start = 100 * half
        expected = np.array([propagate_constant(ss, x_q, high, tau) + high for tau in taus])
        assert_allclose(qstar_at(fore, sw, start + taus), expected, atol=1e-9)
        x_q_odd = propagate_constant(ss, x_q, high, half)
        expected = np.array([propagate_constant(ss, x_q_odd, low, tau) + low for tau in taus])
        assert_allclose(qstar_at(fore, sw, start + half + taus), expected, atol=1e-9)

    def test_qstar_at_boundaries(self, sore):
        sw = element_square_wave(sore, Sinusoid(1.0, 100.0))
        b = qstar_boundary(sore, sw.peak, 100.0)
        half = np.pi / 100.0
        assert_allclose(qstar_at(sore, sw, half, left_limit=True), b.pre, rtol=1e-10, atol=1e-14)
        assert_allclose(qstar_at(sore, sw, half), b.post, rtol=1e-10, atol=1e-14)
        assert_allclose(qstar_at(sore, sw, 2 * half), -b.post, rtol=1e-10, atol=1e-14)

    def test_integrator_is_square_wave(self, clegg):
        sw = square_wave(0.0, 1.0, 1.0)
        t = np.linspace(0.1, 6.0, 13)
        assert_allclose(qstar_at(clegg, sw, t), sw.value(t))


class TestScaling:
    def test_clegg_is_identity(self, clegg, drive_100):
        assert_allclose(scaling_closed_form(clegg, drive_100), [[1.0]])
        assert scaling(clegg, drive_100).method == "identity"

    def test_closed_form_needs_first_order(self, sore, drive_100):
        with pytest.raises(DimensionError):
            scaling_closed_form(sore, drive_100)

    @pytest.mark.parametrize("rho", [0.0, 0.5])
    def test_closed_form_matches_lstsq(self, rho, drive_100):
        el = make_fore(100.0, rho)
        closed = scaling_closed_form(el, drive_100)
        fit = scaling_lstsq(el, drive_100)
        assert fit.Q[0, 0] == pytest.approx(closed[0, 0], rel=1e-8)
        assert not fit.rank_deficient

    def test_dispatch(self, fore, sore, drive_100):
        assert scaling(fore, drive_100).method == "closed_form"
        assert scaling(sore, drive_100).method == "lstsq"
        assert scaling(make_fore(100.0, 1.0), drive_100).method == "identity"

    def test_sampling_stability(self, sore, drive_100):
        coarse = scaling_lstsq(sore, drive_100, n_samples=64).Q
        fine = scaling_lstsq(sore, drive_100, n_samples=128).Q
        assert np.max(np.abs(fine - coarse)) <= 1e-6 * np.max(np.abs(coarse))

    def test_too_few_samples(self, sore, drive_100):
        with pytest.raises(ValueError):
            scaling_lstsq(sore, drive_100, n_samples=4)

    def test_amplitude_independent(self, sore):
        Q1 = scaling(sore, Sinusoid(1.0, 100.0)).Q
        Q2 = scaling(sore, Sinusoid(2.0, 100.0)).Q
        assert_allclose(Q2, Q1, rtol=1e-10, atol=1e-12 * np.max(np.abs(Q1)))

    def test_jump_law(self, sore, drive_100):
        fit = scaling_lstsq(sore, drive_100)
        assert jump_law_residual(sore, drive_100, fit.Q) <= fit.residual + 1e-9

    def test_jump_law_integrator(self):
        el = make_integrator(2, np.diag([0.0, 0.5]))
        assert jump_law_residual(el, Sinusoid(1.0, 3.0), np.eye(2)) < 1e-12

    def test_random_first_order(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = rng.uniform(1.0, 500.0)
            el = make_custom([[-a]], [[a]], [[1.0]], [[0.0]], rng.uniform(-0.9, 0.9))
            sin = Sinusoid(1.0, rng.uniform(1.0, 1e3))
            closed = scaling_closed_form(el, sin)
            assert scaling_lstsq(el, sin).Q[0, 0] == pytest.approx(closed[0, 0], rel=1e-8)
            assert jump_law_residual(el, sin, closed) < 1e-9


class TestReconstruct:
    def test_clegg_matches_simulation(self, clegg, drive_100):
        window = simulate_steady_state(clegg, drive_100)
        x = reconstruct(clegg, drive_100, window.t, window.segment_end)
        assert np.max(np.abs(x - window.x)) < 1e-9

    def test_fore_matches_simulation(self, fore, drive_100):
        window = simulate_steady_state(fore, drive_100)
        x = reconstruct(fore, drive_100, window.t, window.segment_end)
        assert np.max(np.abs(x - window.x)) < 1e-6 * np.max(np.abs(window.x))

    def test_convention_independence(self):
        el = make_integrator(1, 0.5)
        sin = Sinusoid(1.0, 1.0)
        t, left = period_grid(1.0, 256)
        zero_ic = reconstruct(el, sin, t, left, bls_convention="zero_ic")
        zero_mean = reconstruct(el, sin, t, left, bls_convention="zero_mean")
        assert np.max(np.abs(zero_ic - zero_mean)) < 1e-12

    def test_bad_convention(self, clegg, drive_100):
        with pytest.raises(ValueError):
            bls_state(clegg, drive_100, 0.0, "mean")

    def test_partial_reset_shrinks_nonlinearity(self, drive_100):
        t, left = period_grid(100.0, 256)
        peaks = []
        for rho in (0.0, 0.5, 0.9, 0.999):
            el = make_fore(100.0, rho)
            q = reconstruct(el, drive_100, t, left) - bls_state(el, drive_100, t)
            peaks.append(np.max(np.abs(q)))
        assert all(a > b for a, b in zip(peaks, peaks[1:]))


class TestDecompose:
    def test_default_grid(self, fore, drive_100):
        dec = decompose(fore, drive_100, samples_per_period=64)
        assert dec.t.shape == (66,)
        assert dec.q.shape == (66, 1)
        assert_allclose(dec.x_recon, dec.x_bls + dec.q)
        assert dec.method == "closed_form"
        assert dec.jump_residual < 1e-12

    @pytest.mark.parametrize("name", ["fore", "sore"])
    def test_nonlinearity_has_no_mean(self, name, request, drive_100):
        el = request.getfixturevalue(name)
        dec = decompose(el, drive_100, samples_per_period=4096)
        n = 2048
        halves = [slice(0, n + 1), slice(n + 1, 2 * n + 2)]
        mean = sum(simpson(dec.q[h], x=dec.t[h], axis=0) for h in halves) * 100.0 / (2 * np.pi)
        assert np.max(np.abs(mean)) <= 1e-8 * np.max(np.abs(dec.square_wave.peak))

    def test_clegg_values(self, clegg, drive_100):
        dec = decompose(clegg, drive_100, samples_per_period=64)
        assert dec.boundary is None
        assert set(np.round(dec.q[:, 0], 12)) == {0.0, -0.02}
