"""Tests for reset_analysis/hosidf.py."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from reset_analysis.decomposition import bls_state, element_square_wave, scaling
from reset_analysis.errors import ConvergenceGateError
from reset_analysis.lti import Sinusoid, freq_response
from reset_analysis.hosidf import (harmonic_decay, hosidf, nonlinear_output, parseval_check, partial_fourier_q,
                                   q_harmonic, sweep, validate)
from reset_analysis.reset_core import make_custom, make_fore, make_integrator
from reset_analysis.simulator import simulate_steady_state

CLEGG_PHASE_DEG = -np.degrees(np.arctan(np.pi / 4.0))


class TestQHarmonic:
    def test_clegg_fundamental_and_third(self, clegg):
        peak = element_square_wave(clegg, Sinusoid(1.0, 1.0)).peak
        assert q_harmonic(clegg, np.eye(1), peak, 1, 1.0) == pytest.approx(4.0 / np.pi, rel=1e-14)
        assert q_harmonic(clegg, np.eye(1), peak, 3, 1.0) == pytest.approx(4.0 / (3.0 * np.pi), rel=1e-14)

    @pytest.mark.parametrize("name", ["clegg", "fore", "sore"])
    def test_even_orders_vanish(self, name, request):
        el = request.getfixturevalue(name)
        assert q_harmonic(el, np.eye(el.state_dim), np.ones(el.state_dim), 2, 10.0) == 0j

    def test_order_must_be_positive(self, clegg):
        with pytest.raises(ValueError):
            q_harmonic(clegg, np.eye(1), [1.0], 0, 1.0)


class TestHosidf:
    @pytest.mark.parametrize("omega", [1.0, 10.0, 100.0])
    def test_clegg_describing_function(self, clegg, omega):
        H1 = hosidf(clegg, 1, omega)
        assert H1 == pytest.approx(4.0 / (np.pi * omega) - 1j / omega, rel=1e-13)
        assert np.degrees(np.angle(H1)) == pytest.approx(CLEGG_PHASE_DEG, abs=1e-9)
        assert CLEGG_PHASE_DEG == pytest.approx(-38.146026, abs=1e-6)

    @pytest.mark.parametrize("name", ["fore", "fore_half", "sore"])
    def test_fundamental_split(self, name, request):
        el = request.getfixturevalue(name)
        omega = 37.0
        peak = element_square_wave(el, Sinusoid(1.0, omega)).peak
        q1 = q_harmonic(el, scaling(el, Sinusoid(1.0, omega)).Q, peak, 1, omega)
        assert hosidf(el, 1, omega) - q1 == pytest.approx(freq_response(el.base, 1j * omega), abs=1e-12)

    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_amplitude_independence(self, sore, k):
        reference = hosidf(sore, k, 80.0)
        for b in (0.5, 2.0):
            assert hosidf(sore, k, 80.0, amplitude=b) == pytest.approx(reference, rel=1e-12)

    def test_linear_limit(self):
        linear = make_fore(100.0, 1.0)
        assert hosidf(linear, 1, 50.0, enforce_convergence=False) == pytest.approx(
            freq_response(linear.base, 50j), abs=1e-15)
        assert hosidf(linear, 3, 50.0, enforce_convergence=False) == 0j

    def test_gate(self):
        with pytest.raises(ConvergenceGateError) as info:
            hosidf(make_integrator(1, 1.0), 1, 1.0)
        assert info.value.report.max_radius == pytest.approx(1.0)


class TestSweep:
    def test_single_point_matches_hosidf(self, fore):
        table = sweep(fore, [42.0], 5)
        for k in range(1, 6):
            assert table.H[0, k - 1] == pytest.approx(hosidf(fore, k, 42.0), abs=1e-15)

    def test_fore_grid(self, fore):
        omegas = np.logspace(0, 4, 30)
        table = sweep(fore, omegas, 9, jobs=4)
        assert np.all(table.H[:, 1::2] == 0)
        assert np.all(np.isfinite(table.H))
        assert_allclose(table.H[:, 0] - table.q[:, 0], table.G, atol=1e-12)
        assert table.failed == []
        assert_allclose(table.omegas, omegas)

    def test_sore_grid_is_finite(self, sore):
        table = sweep(sore, np.logspace(0, 4, 12), 5)
        assert np.all(np.isfinite(table.H))

    def test_failures_are_recorded(self):
        # undamped oscillator: no sinusoidal steady state anywhere, pole hit at w = 1
        el = make_custom([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]], 0.0)
        table = sweep(el, [1.0, 2.0], 3)
        assert table.failed == [0, 1]
        assert np.all(np.isnan(table.H.real))

    def test_frame(self, fore):
        frame = sweep(fore, [10.0, 100.0], 4).to_frame()
        assert list(frame.columns) == ["omega_rad_s", "k", "re", "im", "mag", "mag_db", "phase_deg", "source"]
        assert len(frame) == 2 * 5
        closed = frame[frame.source == "closed_form"]
        assert np.all(closed[closed.k % 2 == 0].mag == 0.0)
        assert frame.phase_deg.between(-180.0, 180.0, inclusive="right").all()
        bls = frame[frame.source == "bls"]
        assert bls.re.iloc[1] + 1j * bls.im.iloc[1] == pytest.approx(freq_response(fore.base, 100j))

    def test_empty_grid(self, fore):
        with pytest.raises(ValueError):
            sweep(fore, [], 3)

    def test_gate_can_be_skipped(self):
        table = sweep(make_integrator(1, 1.0), [2.0], 3, enforce_convergence=False)
        assert table.H[0, 0] == pytest.approx(-0.5j)


class TestValidate:
    def test_clegg(self, clegg):
        report = validate(clegg, 100.0, 9)
        odd = report.orders % 2 == 1
        assert np.max(report.rel_error[odd]) < 1e-6
        assert np.max(report.rel_error[~odd]) < 1e-8

    @pytest.mark.parametrize("omega", [10.0, 100.0, 1000.0])
    def test_fore(self, fore, omega):
        assert validate(fore, omega, 5).max_error < 1e-3

    def test_reset_disabled_is_exact(self):
        report = validate(make_fore(100.0, 1.0), 100.0, 3)
        assert report.closed_form[2] == 0j
        assert np.all(np.isfinite(report.rel_error))
        assert report.passed(1e-8)

    def test_corrupted_scaling_is_caught(self, fore):
        assert not validate(fore, 100.0, 5, q_scale=1.1).passed(1e-3)


class TestSeries:
    def test_clegg_decay(self, clegg):
        orders, values = harmonic_decay(clegg, 2.0, 19)
        assert list(orders) == list(range(1, 20, 2))
        assert_allclose(values, 4.0 / (np.pi * 2.0), rtol=1e-10)

    def test_k_max_must_be_odd(self, fore, drive_100):
        with pytest.raises(ValueError):
            partial_fourier_q(fore, drive_100, 4, [0.0])

    def test_integrator_partial_sum_approaches_square_wave(self, clegg):
        sin = Sinusoid(1.0, 1.0)
        t = np.linspace(0.0, 2 * np.pi, 4001)[:-1] + 1e-4
        exact = element_square_wave(clegg, sin).value(t)[:, 0]
        rms = np.sqrt(np.mean((partial_fourier_q(clegg, sin, 199, t) - exact) ** 2))
        assert rms < 0.05 * np.sqrt(np.mean(exact ** 2))

    def test_fore_partial_sums_converge(self, fore, drive_100):
        window = simulate_steady_state(fore, drive_100)
        simulated = (window.x - bls_state(fore, drive_100, window.t)) @ fore.base.C[0]
        errors = [np.sqrt(np.mean((partial_fourier_q(fore, drive_100, k, window.t) - simulated) ** 2))
                  for k in (19, 59, 199)]
        assert errors[0] > errors[1] > errors[2]

    def test_nonlinear_output_matches_simulation(self, fore, drive_100):
        window = simulate_steady_state(fore, drive_100)
        simulated = (window.x - bls_state(fore, drive_100, window.t)) @ fore.base.C[0]
        closed = nonlinear_output(fore, drive_100, window.t, window.segment_end)
        assert np.max(np.abs(closed - simulated)) < 1e-9

    def test_parseval(self, fore):
        window = simulate_steady_state(fore, Sinusoid(1.0, 100.0))
        report = parseval_check(window, 9)
        assert report.harmonic_power <= report.signal_power * (1.0 + 1e-8)
        assert report.ratio > 0.9
