import math

import numpy as np
import pytest
from scipy import linalg

from dissipative_cavity import linres, oracle
from dissipative_cavity.core import CavitySystem
from dissipative_cavity.errors import ResolutionError, UnstableSystem

PASSIVE = CavitySystem(gamma1=1.0, gamma2=1.0, omega_m=0.5, gamma_m=0.01)
BENCH = CavitySystem(gamma1=1e3, gamma2=1e3, g_gamma0=math.sqrt(10.0), omega_m=1.0, gamma_m=1e-2)


def _vacuum_sim(K=64, seed=3):
    return oracle.SimConfig(dt=0.02, duration=60.0 * K, n_segments=K, seed=seed, outputs=(linres.Y_OUT1, linres.X_OUT2))


def test_state_space_reproduces_transfer_matrix():
    s = CavitySystem(gamma1=1.0, gamma2=0.7, detuning=0.3, g_gamma0=0.2, g_omega0=0.1, omega_m=0.8, gamma_m=0.05)
    A, B, C, D = oracle.state_space(s)
    for w in (0.0, 0.4, 0.8, 2.5):
        H = C @ np.linalg.solve(-1j * w * np.eye(4) - A, B) + D
        np.testing.assert_allclose(H, linres.transfer_matrix(s, w).entries, rtol=1e-12, atol=1e-13)


def test_discretization_preserves_stationary_covariance():
    A, B, _, _ = oracle.state_space(BENCH)
    cov = np.array([1.0, 1.0, 1.0, 1.0, 0.5])
    P = linalg.solve_continuous_lyapunov(A, -B @ np.diag(cov) @ B.T)
    Phi, Q = oracle.discretize(A, B, cov, 0.05)
    np.testing.assert_allclose(Phi[:4, :4], linalg.expm(A * 0.05), rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(Phi[:4, :4] @ P @ Phi[:4, :4].T + Q[:4, :4], P, rtol=1e-9, atol=1e-12)


def test_vacuum_flat_within_three_sigma():
    sim = _vacuum_sim(K=128)
    est = oracle.simulate_psd(PASSIVE, None, sim)
    for rep in oracle.compare(PASSIVE, None, sim, est):
        assert rep.passed, (rep.label, rep.pass_fraction)
        assert np.mean(rep.estimate) == pytest.approx(1.0, abs=0.02)


def test_same_seed_bit_identical():
    sim = _vacuum_sim(K=16)
    a = oracle.simulate_psd(PASSIVE, None, sim)
    b = oracle.simulate_psd(PASSIVE, None, sim)
    c = oracle.simulate_psd(PASSIVE, None, sim, seed=99)
    for label in a:
        np.testing.assert_array_equal(a[label].psd, b[label].psd)
        np.testing.assert_array_equal(a[label].stderr, b[label].stderr)
        assert not np.array_equal(a[label].psd, c[label].psd)


def test_error_bars_scale_with_segment_count():
    small = oracle.simulate_psd(PASSIVE, None, _vacuum_sim(K=32))["Y_out1"]
    large = oracle.simulate_psd(PASSIVE, None, _vacuum_sim(K=128))["Y_out1"]
    ratio = np.mean(small.stderr) / np.mean(large.stderr)
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_overlap_correlation_hann():
    # squared correlation of Hann segments at 50% overlap is 1/36
    assert oracle.overlap_correlation(4096) == pytest.approx(1 / 36, rel=1e-6)


def test_feedthrough_is_vacuum():
    for out in (linres.X_OUT1, linres.Y_OUT1, linres.X_OUT2, linres.Y_OUT2, oracle.Quadrature(0.3)):
        assert oracle.feedthrough(BENCH, None, out) == pytest.approx(1.0, rel=1e-14)


def test_expected_welch_flat_for_vacuum():
    sim = _vacuum_sim()
    w = np.linspace(0.1, 3.0, 30)
    np.testing.assert_allclose(oracle.expected_welch(PASSIVE, None, sim, linres.Y_OUT1, w), 1.0, rtol=1e-12)


def test_benchmark_peak_single_seed():
    sim = oracle.SimConfig(dt=4e-5, duration=257 * 1250, n_segments=256, seed=7, outputs=(linres.X_OUT1,), decimate=1250)
    est = oracle.simulate_psd(BENCH, None, sim)["X_out1"]
    i = int(np.argmin(np.abs(est.omega - 1.0)))
    assert abs(est.psd[i] - 25.0) < 3 * est.stderr[i]
    window_mean = oracle.expected_welch(BENCH, None, sim, linres.X_OUT1, est.omega[i : i + 1])[0]
    assert window_mean == pytest.approx(25.0, rel=0.1)
    reps = oracle.compare(BENCH, None, sim, {"X_out1": est}, band=(0.8, 1.2))
    assert reps[0].passed
    bad = oracle.compare(BENCH, None, sim, {"X_out1": est}, band=(0.8, 1.2), target_scale=1.5)
    assert not bad[0].passed


def test_multi_seed_summary_and_negative_control():
    sim = oracle.SimConfig(dt=0.02, duration=60.0 * 64, n_segments=64, seed=5, outputs=(linres.Y_OUT1,))
    good = oracle.oracle_check(PASSIVE, None, sim, n_seeds=3)
    assert good.passed and len(good.reports) == 3
    runs = oracle.run_seeds(PASSIVE, None, sim, 3)
    bad = oracle.summarize(PASSIVE, None, sim, runs, target_scale=1.5)
    assert not bad.passed
    np.testing.assert_array_equal(
        np.concatenate([r.z for r in good.reports]),
        np.concatenate([r.z for r in oracle.summarize(PASSIVE, None, sim, runs).reports]),
    )


def test_parallel_seeds_match_serial():
    sim = _vacuum_sim(K=8)
    serial = oracle.run_seeds(PASSIVE, None, sim, 3, n_jobs=1)
    parallel = oracle.run_seeds(PASSIVE, None, sim, 3, n_jobs=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a["Y_out1"].psd, b["Y_out1"].psd)


def test_resolution_errors():
    with pytest.raises(ResolutionError):
        oracle.simulate_psd(PASSIVE, None, oracle.SimConfig(dt=0.1, duration=1000.0))
    with pytest.raises(ResolutionError):
        oracle.check_resolution(BENCH, oracle.SimConfig(dt=4e-5, duration=100.0))
    with pytest.raises(ResolutionError):
        oracle.check_resolution(PASSIVE, oracle.SimConfig(dt=0.01, duration=100.0, n_segments=1))


def test_unstable_drift_rejected():
    with pytest.raises(UnstableSystem):
        oracle.check_stability(np.array([[0.1, 0.0], [0.0, -1.0]]))
    A, _, _, _ = oracle.state_space(BENCH)
    oracle.check_stability(A)
