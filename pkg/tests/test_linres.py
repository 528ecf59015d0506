import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissipative_cavity import linres
from dissipative_cavity.core import CavitySystem, NoiseModel, validate
from dissipative_cavity.errors import UnknownOutputIndex

PASSIVE = CavitySystem(gamma1=1.0, gamma2=1.0)
OPTICAL_OUT = [linres.X_OUT1, linres.Y_OUT1, linres.X_OUT2, linres.Y_OUT2]
OPTICAL_IN = [linres.X_IN1, linres.Y_IN1, linres.X_IN2, linres.Y_IN2]

rates = st.floats(0.05, 20.0)
freqs = st.floats(0.0, 10.0)


def test_susceptibility_limits():
    s = CavitySystem(gamma1=1.0, gamma2=1.0, omega_m=0.7, gamma_m=1e-3)
    assert linres.mech_susceptibility(s, 0.0) == pytest.approx(2 / 0.7, rel=1e-15)
    assert linres.mech_susceptibility(s, 0.7) == pytest.approx(2j / 1e-3, rel=1e-12)
    assert abs(linres.mech_susceptibility(s, 1e8)) < 1e-15


def test_reflection_at_critical_coupling():
    T = linres.transfer_matrix(PASSIVE, 0.0)
    assert abs(T.entry("Y_out1", "Y_in1")) < 1e-15
    assert T.entry("Y_out1", "Y_in2") == pytest.approx(1.0, abs=1e-15)


@given(rates, rates, st.floats(-5, 5), freqs, st.floats(0.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_force_row_only_sees_port2_phase(g1, g2, delta, w, g):
    s = CavitySystem(gamma1=g1, gamma2=g2, detuning=delta, g_gamma0=g)
    row = linres.transfer_matrix(s, w).entries[linres.FORCE]
    others = [j for j in range(5) if j != linres.Y_IN2]
    assert np.all(np.abs(row[others]) == 0.0)
    assert row[linres.Y_IN2] == pytest.approx(-g / math.sqrt(g2), rel=1e-14)


@given(rates, rates, st.floats(-5, 5), freqs)
@settings(max_examples=60, deadline=None)
def test_passive_cavity_unitary(g1, g2, delta, w):
    s = CavitySystem(gamma1=g1, gamma2=g2, detuning=delta)
    E = linres.transfer_matrix(s, w).entries
    norms = np.sum(np.abs(E[np.ix_(OPTICAL_OUT, OPTICAL_IN)]) ** 2, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_unitary_at_reference_frequency():
    E = linres.transfer_matrix(PASSIVE.replace(gamma2=2.5, detuning=0.3), 0.7).entries
    norms = np.sum(np.abs(E[np.ix_(OPTICAL_OUT, OPTICAL_IN)]) ** 2, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_port2_silent_at_critical_coupling():
    s = CavitySystem(gamma1=1.0, gamma2=1.0, g_gamma0=1.0)
    sig = linres.transfer_matrix(s, 1e-9).signal
    assert abs(sig[linres.X_OUT2]) < 1e-8
    assert abs(sig[linres.Y_OUT2]) == 0.0


@given(rates, rates, freqs, st.floats(0.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_phase_quadratures_carry_no_signal(g1, g2, w, g):
    sig = linres.transfer_matrix(CavitySystem(gamma1=g1, gamma2=g2, g_gamma0=g), w).signal
    assert sig[linres.Y_OUT1] == 0.0
    assert sig[linres.Y_OUT2] == 0.0


@given(rates, rates, freqs, st.floats(0.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_port2_signal_closed_form(g1, g2, w, g):
    s = CavitySystem(gamma1=g1, gamma2=g2, g_gamma0=g)
    sig = linres.transfer_matrix(s, w).signal[linres.X_OUT2]
    expected = 2 * g / math.sqrt(g2) * (g2 - g1 + 2j * w) / (g2 + g1 - 2j * w)
    assert abs(sig - expected) <= 1e-12 * abs(expected) + 1e-14 * g / math.sqrt(g2)


@given(rates, rates, st.floats(-5, 5), st.floats(0.01, 10.0), st.floats(0, 2), st.floats(0, 2))
@settings(max_examples=60, deadline=None)
def test_reality_symmetry(g1, g2, delta, w, gg, gw):
    s = CavitySystem(gamma1=g1, gamma2=g2, detuning=delta, g_gamma0=gg, g_omega0=gw, gamma_m=0.01)
    a = linres.transfer_matrix(s, w)
    b = linres.transfer_matrix(s, -w)
    np.testing.assert_allclose(b.entries, a.entries.conj(), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(b.signal, a.signal.conj(), rtol=1e-12, atol=1e-14)


def _chi_eff_by_elimination(s, w):
    # Eliminate the optical pair by hand: [X, Y] = M^-1 [G_gamma, G_omega] q
    s = validate(s)
    a, d = 0.5 * s.kappa - 1j * w, s.detuning
    det = a * a + d * d
    x_per_q = (a * s.G_gamma - d * s.G_omega) / det
    chi = 2 * s.omega_m / (s.omega_m**2 - w**2 - 1j * s.gamma_m * w)
    return 1.0 / (1.0 / chi - 2 * s.G_omega * x_per_q)


def test_effective_susceptibility_against_elimination():
    s = CavitySystem(gamma1=1.0, gamma2=0.7, detuning=0.4, g_gamma0=0.05, g_omega0=0.08, omega_m=0.9, gamma_m=1e-2)
    w = np.linspace(0.0, 2.0, 41)
    got = linres.closed_loop_susceptibility(s, w)
    ref = _chi_eff_by_elimination(s, w)
    np.testing.assert_allclose(got, ref, rtol=1e-12)
    assert np.max(np.abs(got - linres.mech_susceptibility(s, w))) > 1e-3


def test_effective_susceptibility_without_coupling():
    s = CavitySystem(gamma1=1.0, gamma2=0.3, detuning=1.2)
    w = np.linspace(0, 3, 7)
    np.testing.assert_allclose(linres.closed_loop_susceptibility(s, w), linres.mech_susceptibility(s, w), rtol=1e-14)


def test_vacuum_in_vacuum_out():
    w = np.linspace(0.0, 5.0, 11)
    for label in ("X_out1", "Y_out1", "X_out2", "Y_out2"):
        np.testing.assert_allclose(linres.output_psd(PASSIVE.replace(detuning=0.5), None, w, label), 1.0, rtol=1e-13)


def test_laser_excess_suppressed_in_reflection():
    C, w = 1e4, 1e-3
    s = CavitySystem(gamma1=1.0, gamma2=1.0, g_gamma0=0.2)
    excess = linres.output_psd(s, NoiseModel(laser_amp_excess=C), w, "X_out1") - linres.output_psd(s, None, w, "X_out1")
    assert excess == pytest.approx(C * w**2 / (1 + w**2), rel=1e-8)


def test_laser_excess_does_not_reach_oscillator():
    s = CavitySystem(gamma1=1.0, gamma2=2.0, g_gamma0=0.2, n_th=1.0)
    loud = NoiseModel(laser_amp_excess=50.0, laser_phase_excess=70.0)
    w = np.linspace(0.5, 1.5, 21)
    for label in ("q", "F"):
        np.testing.assert_array_equal(linres.output_psd(s, loud, w, label), linres.output_psd(s, None, w, label))


def test_quadrature_psd_interpolates_ports():
    s = CavitySystem(gamma1=1.0, gamma2=1.5, g_gamma0=0.3, gamma_m=0.01)
    w = 0.9
    assert linres.quadrature_psd(s, None, w, 0.0) == pytest.approx(linres.output_psd(s, None, w, "X_out1"), rel=1e-14)
    assert linres.quadrature_psd(s, None, w, math.pi / 2, port=2) == pytest.approx(
        linres.output_psd(s, None, w, "Y_out2"), rel=1e-14
    )


def test_feedthrough_is_reflected_vacuum():
    s = CavitySystem(gamma1=1.0, gamma2=1.5, g_gamma0=0.3, gamma_m=0.01)
    for label in ("X_out1", "Y_out1", "X_out2", "Y_out2"):
        assert linres.feedthrough_psd(s, None, label) == pytest.approx(1.0, rel=1e-15)
        assert linres.output_psd(s, None, 1e7, label) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("bad", ["Z_out", 6, -1])
def test_unknown_output(bad):
    with pytest.raises(UnknownOutputIndex):
        linres.output_psd(PASSIVE, None, 0.0, bad)


def test_vectorized_matches_scalar():
    s = CavitySystem(gamma1=1.0, gamma2=0.6, detuning=0.2, g_gamma0=0.1, g_omega0=0.05, gamma_m=0.01)
    w = np.array([0.0, 0.3, 1.1])
    T = linres.transfer_matrix(s, w)
    for i, wi in enumerate(w):
        Ti = linres.transfer_matrix(s, wi)
        np.testing.assert_array_equal(T.entries[i], Ti.entries)
