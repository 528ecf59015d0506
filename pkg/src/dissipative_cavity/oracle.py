"""Time-domain stochastic check of the analytic spectra.

The linearized equations are integrated as a real linear SDE

    ds = A s dt + B dN,   s = (X, Y, q, dq/dt)

driven by independent white noises ``dN`` whose two-sided PSDs are those of
:class:`~dissipative_cavity.core.NoiseModel` (1 per vacuum quadrature,
``n_th + 1/2`` for the thermal force).  Propagation uses the exact transition
matrix and noise covariance of the linear system, so there is no
time-step bias.  Each output sample is the exact average of the continuous
output over one sample interval (state part plus direct feed-through of the
input noise), which keeps the input/output cross-correlations intact.

Spectra are estimated with mean-removed Hann segments at 50 % overlap.  The
analytic target for a Welch bin is the engine spectrum multiplied by the
box-average response, folded over the sampling aliases and smoothed by the
window kernel, i.e. the exact expectation of the estimator up to the
truncation of the alias sum.

Seeds are independent ``SeedSequence`` children of ``SimConfig.seed``.  When
several are run, estimates are collected and reduced in seed order, so the
result does not depend on completion order.
"""
from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, signal

from . import linres
from .core import VACUUM, CavitySystem, NoiseModel, validate
from .errors import ResolutionError, UnstableSystem

CHUNK = 1 << 17
ALIAS_SPAN = 50.0
KERNEL_HALF_WIDTH = 16  # bins
KERNEL_OVERSAMPLE = 16
Z_LIMIT = 3.0
PASS_FRACTION = 0.99


@dataclass(frozen=True)
class Quadrature:
    """Rotated quadrature ``X cos(theta) + Y sin(theta)`` of an output port."""

    theta: float
    port: int = 1

    @property
    def label(self) -> str:
        return f"Z{self.port}({self.theta:.17g})"


@dataclass(frozen=True)
class SimConfig:
    dt: float
    duration: float
    n_segments: int = 256
    seed: int = 0
    outputs: tuple = (linres.X_OUT1,)
    decimate: int = 1

    @property
    def sample_interval(self) -> float:
        return self.dt * self.decimate


@dataclass
class SpectrumEstimate:
    omega: np.ndarray
    psd: np.ndarray
    stderr: np.ndarray
    n_segments: int
    nperseg: int
    segments: np.ndarray = field(repr=False, default=None)


def output_label(out) -> str:
    if isinstance(out, Quadrature):
        return out.label
    return linres.OUTPUTS[linres._index(out, linres.OUTPUTS)]


# --- model ------------------------------------------------------------------


def state_space(system: CavitySystem):
    """Drift ``A`` (4x4), noise gain ``B`` (4x5), output maps ``C`` (6x4), ``D`` (6x5)."""
    s = validate(system)
    sg1, sg2 = math.sqrt(s.gamma1), math.sqrt(s.gamma2)
    h = 0.5 * s.kappa
    A = np.array(
        [
            [-h, -s.detuning, s.G_gamma, 0.0],
            [s.detuning, -h, s.G_omega, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [4.0 * s.omega_m * s.G_omega, 0.0, -s.omega_m**2, -s.gamma_m],
        ]
    )
    B = np.zeros((4, 5))
    B[0, 0] = B[1, 1] = 0.5 * sg1
    B[0, 2] = B[1, 3] = 0.5 * sg2
    B[3, 3] = -2.0 * s.omega_m * s.G_gamma / sg2
    B[3, 4] = 2.0 * s.omega_m * math.sqrt(s.gamma_m)
    Cu, D = linres._output_maps(s)
    C = np.zeros((6, 4))
    C[:, :3] = Cu
    return A, B, C, D


def _output_rows(C, D, outputs):
    rows_c, rows_d = [], []
    for out in outputs:
        if isinstance(out, Quadrature):
            xi, yi = (linres.X_OUT1, linres.Y_OUT1) if out.port == 1 else (linres.X_OUT2, linres.Y_OUT2)
            c, sn = math.cos(out.theta), math.sin(out.theta)
            rows_c.append(c * C[xi] + sn * C[yi])
            rows_d.append(c * D[xi] + sn * D[yi])
        else:
            i = linres._index(out, linres.OUTPUTS)
            rows_c.append(C[i])
            rows_d.append(D[i])
    return np.array(rows_c), np.array(rows_d)


def check_stability(A) -> None:
    eig = np.linalg.eigvals(A)
    if np.any(eig.real >= 0.0):
        raise UnstableSystem(f"closed-loop pole(s) with non-negative real part: {eig[eig.real >= 0]}")


def check_resolution(system: CavitySystem, sim: SimConfig) -> None:
    s = validate(system)
    fastest = max(s.kappa, s.omega_m)
    if not sim.dt < 0.1 / fastest:
        raise ResolutionError(f"dt = {sim.dt:.3g} must be below 0.1/{fastest:.3g}")
    mechanical = (
        s.G_gamma != 0.0
        or s.G_omega != 0.0
        or any(not isinstance(o, Quadrature) and linres._index(o, linres.OUTPUTS) >= linres.POSITION for o in sim.outputs)
    )
    if mechanical and not sim.duration * s.gamma_m > 50.0:
        raise ResolutionError(f"duration * gamma_m = {sim.duration * s.gamma_m:.3g} must exceed 50")
    if sim.n_segments < 2:
        raise ResolutionError("need at least two segments")


def discretize(A, B, noise_cov, h):
    """Exact one-step propagator of ``(s, int s dt, int dN)`` over ``h``.

    Van Loan's block exponential on a substep short enough to be well
    conditioned, then repeated doubling ``Q <- Phi Q Phi^T + Q``.
    """
    n, m = B.shape
    N = 2 * n + m
    At = np.zeros((N, N))
    At[:n, :n] = A
    At[n : 2 * n, :n] = np.eye(n)
    Bt = np.zeros((N, m))
    Bt[:n] = B
    Bt[2 * n :] = np.eye(m)
    G = Bt @ np.diag(noise_cov) @ Bt.T

    norm = np.linalg.norm(At, 1) * h
    halvings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    h0 = h / 2**halvings
    V = np.zeros((2 * N, 2 * N))
    V[:N, :N] = -At
    V[:N, N:] = G
    V[N:, N:] = At.T
    F = linalg.expm(V * h0)
    Phi = F[N:, N:].T
    Q = Phi @ F[:N, N:]
    for _ in range(halvings):
        Q = Phi @ Q @ Phi.T + Q
        Phi = Phi @ Phi
    Q = 0.5 * (Q + Q.T)
    return Phi, Q


def _psd_sqrt(cov):
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


class _Propagator:
    """s_{k+1} = Phi s_k + e_k via the complex Schur form and scalar recursions."""

    def __init__(self, Phi):
        self.T, self.Z = linalg.schur(Phi, output="complex")
        self.n = Phi.shape[0]

    def run(self, m0, e):
        """Return modal states m_0..m_{len(e)} (one more than noise rows)."""
        T, n = self.T, self.n
        u = e @ self.Z.conj()
        out = np.empty((len(e) + 1, n), dtype=complex)
        out[0] = m0
        for i in range(n - 1, -1, -1):
            drive = u[:, i].copy()
            for j in range(i + 1, n):
                drive += T[i, j] * out[:-1, j]
            lam = T[i, i]
            out[1:, i] = signal.lfilter([1.0], [1.0, -lam], drive, zi=[lam * m0[i]])[0]
        return out


def simulate_outputs(system: CavitySystem, noise: NoiseModel | None, sim: SimConfig, n_samples: int, rng):
    """Box-averaged output records, shape ``(n_samples, len(sim.outputs))``."""
    s = validate(system)
    noise = noise or VACUUM
    A, B, C, D = state_space(s)
    check_stability(A)
    S_in = np.asarray(noise.input_psd(s), dtype=float)
    h = sim.sample_interval
    Phi_t, Q = discretize(A, B, S_in, h)
    n = A.shape[0]
    Co, Do = _output_rows(C, D, sim.outputs)
    k = len(Co)

    # (state noise, output noise) as linear maps of the augmented increment
    P = np.zeros((n + k, Q.shape[0]))
    P[:n, :n] = np.eye(n)
    P[n:, n : 2 * n] = Co / h
    P[n:, 2 * n :] = Do / h
    L = _psd_sqrt(P @ Q @ P.T)
    Phi = Phi_t[:n, :n]
    H = Co @ Phi_t[n : 2 * n, :n] / h

    P_stat = linalg.solve_continuous_lyapunov(A, -(B * S_in) @ B.T)
    state = _psd_sqrt(P_stat) @ rng.standard_normal(n)

    prop = _Propagator(Phi)
    m = prop.Z.conj().T @ state
    out = np.empty((n_samples, k))
    for start in range(0, n_samples, CHUNK):
        stop = min(start + CHUNK, n_samples)
        xi = rng.standard_normal((stop - start, n + k))
        eta = xi @ L.T
        modes = prop.run(m, eta[:, :n])
        states = (modes[:-1] @ prop.Z.T).real
        out[start:stop] = states @ H.T + eta[:, n:]
        m = modes[-1]
    return out


def _segment_layout(sim: SimConfig):
    h = sim.sample_interval
    total = int(round(sim.duration / h))
    nperseg = 2 * (total // (sim.n_segments + 1))
    if nperseg < 16:
        raise ResolutionError("segments too short; increase duration or reduce n_segments")
    return nperseg, (sim.n_segments + 1) * nperseg // 2


def overlap_correlation(nperseg: int) -> float:
    """Correlation of adjacent half-overlapping periodograms for white input."""
    w = signal.get_window("hann", nperseg)
    half = nperseg // 2
    return float(np.dot(w[half:], w[:-half]) ** 2 / np.dot(w, w) ** 2)


def welch_segments(x, h, nperseg):
    f, _, Sxx = signal.spectrogram(
        x,
        fs=1.0 / h,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend="constant",
        return_onesided=False,
        scaling="density",
        mode="psd",
    )
    keep = (f > 0) & (f < 0.5 / h)
    return 2.0 * math.pi * f[keep], Sxx[keep]


def simulate_psd(system: CavitySystem, noise: NoiseModel | None, sim: SimConfig, seed=None) -> dict:
    """Estimated symmetrized PSDs with standard errors for every requested output.

    Returns ``{label: SpectrumEstimate}``; frequencies are angular and
    strictly positive, below Nyquist.
    """
    check_resolution(system, sim)
    nperseg, n_samples = _segment_layout(sim)
    rng = np.random.default_rng(sim.seed if seed is None else seed)
    data = simulate_outputs(system, noise, sim, n_samples, rng)
    rho2 = overlap_correlation(nperseg)
    result = {}
    for col, out in enumerate(sim.outputs):
        omega, seg = welch_segments(data[:, col], sim.sample_interval, nperseg)
        K = seg.shape[1]
        inflate = math.sqrt(1.0 + 2.0 * rho2 * (K - 1) / K)
        result[output_label(out)] = SpectrumEstimate(
            omega=omega,
            psd=seg.mean(axis=1),
            stderr=seg.std(axis=1, ddof=1) / math.sqrt(K) * inflate,
            n_segments=K,
            nperseg=nperseg,
            segments=seg,
        )
    return result


# --- analytic target --------------------------------------------------------


def analytic_psd(system: CavitySystem, noise: NoiseModel | None, out, omega):
    if isinstance(out, Quadrature):
        return linres.quadrature_psd(system, noise, omega, out.theta, port=out.port)
    return linres.output_psd(system, noise, omega, out)


def feedthrough(system: CavitySystem, noise: NoiseModel | None, out) -> float:
    s = validate(system)
    noise = noise or VACUUM
    _, _, C, D = state_space(s)
    _, d = _output_rows(C, D, [out])
    return float(np.abs(d[0]) ** 2 @ np.asarray(noise.input_psd(s)))


def _kernel(nperseg):
    w = signal.get_window("hann", nperseg)
    size = nperseg * KERNEL_OVERSAMPLE
    H2 = np.abs(np.fft.fft(w, n=size)) ** 2 / (np.dot(w, w) * size)
    span = KERNEL_HALF_WIDTH * KERNEL_OVERSAMPLE
    idx = np.arange(-span, span + 1)
    return idx / KERNEL_OVERSAMPLE, H2[idx % size]


def expected_welch(system: CavitySystem, noise: NoiseModel | None, sim: SimConfig, out, omega):
    """Expectation of the Welch estimate at bin frequencies ``omega``."""
    s = validate(system)
    h = sim.sample_interval
    nperseg, _ = _segment_layout(sim)
    omega = np.asarray(omega, dtype=float)
    s_inf = feedthrough(s, noise, out)
    wrap = 2.0 * math.pi / h
    bin_width = wrap / nperseg

    def excess(w):
        return (analytic_psd(s, noise, out, w) - s_inf) * np.sinc(w * h / (2.0 * math.pi)) ** 2

    offsets, weights = _kernel(nperseg)
    local = excess(omega[:, None] + offsets[None, :] * bin_width)
    centre = excess(omega)
    base = local @ weights + (1.0 - weights.sum()) * centre

    n_alias = min(4000, math.ceil(ALIAS_SPAN * max(s.kappa, s.omega_m) / wrap))
    n = np.concatenate([np.arange(-n_alias, 0), np.arange(1, n_alias + 1)])
    aliased = excess(omega[:, None] + n[None, :] * wrap).sum(axis=1) if n_alias else 0.0
    return s_inf + base + aliased


# --- comparison -------------------------------------------------------------


@dataclass
class OracleReport:
    label: str
    omega: np.ndarray
    estimate: np.ndarray
    target: np.ndarray
    stderr: np.ndarray
    z: np.ndarray
    pass_fraction: float
    passed: bool


def _band_mask(omega, band, skip_bins):
    mask = np.ones(omega.shape, dtype=bool)
    mask[:skip_bins] = False
    if band is not None:
        mask &= (omega >= band[0]) & (omega <= band[1])
    return mask


def model_stderr(target, estimate: SpectrumEstimate):
    """Standard error of a Welch bin for a Gaussian process with mean ``target``."""
    K = estimate.n_segments
    rho2 = overlap_correlation(estimate.nperseg)
    return target * math.sqrt((1.0 + 2.0 * rho2 * (K - 1) / K) / K)


def targets_for(system, noise, sim, estimates: dict, band=None, skip_bins=3):
    """Analytic Welch expectations on the bins selected for comparison."""
    out = {}
    for o in sim.outputs:
        est = estimates[output_label(o)]
        mask = _band_mask(est.omega, band, skip_bins)
        out[output_label(o)] = (mask, expected_welch(system, noise, sim, o, est.omega[mask]))
    return out


def compare(system, noise, sim, estimates: dict, band=None, target_scale=1.0, skip_bins=3, targets=None):
    """z-scores of one simulation against the analytic targets.

    The z-score uses the standard error the estimator has if the target is
    the true spectrum; the empirical error bars stay in the estimates.
    """
    if targets is None:
        targets = targets_for(system, noise, sim, estimates, band, skip_bins)
    reports = []
    for o in sim.outputs:
        label = output_label(o)
        est = estimates[label]
        mask, target = targets[label]
        target = target_scale * target
        se = model_stderr(target, est)
        z = (est.psd[mask] - target) / se
        frac = float(np.mean(np.abs(z) < Z_LIMIT))
        reports.append(OracleReport(label, est.omega[mask], est.psd[mask], target, se, z, frac, frac >= PASS_FRACTION))
    return reports


def _run_seed(args):
    system, noise, sim, seed = args
    return simulate_psd(system, noise, sim, seed=seed)


def run_seeds(system, noise, sim: SimConfig, n_seeds: int, n_jobs: int = 1) -> list:
    """Independent simulations, returned in seed order."""
    children = np.random.SeedSequence(sim.seed).spawn(n_seeds)
    jobs = [(system, noise, sim, child) for child in children]
    if n_jobs <= 1:
        return [_run_seed(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_seed, jobs))


@dataclass
class MultiSeedSummary:
    reports: list
    pass_fraction: float
    passed: bool
    n_points: int


def summarize(system, noise, sim: SimConfig, runs: list, band=None, target_scale=1.0) -> MultiSeedSummary:
    """Pool the z-scores of already simulated runs into one pass/fail verdict."""
    targets = targets_for(system, noise, sim, runs[0], band)
    reports = []
    for est in runs:
        reports.extend(compare(system, noise, sim, est, target_scale=target_scale, targets=targets))
    z = np.concatenate([r.z for r in reports])
    frac = float(np.mean(np.abs(z) < Z_LIMIT))
    return MultiSeedSummary(reports, frac, frac >= PASS_FRACTION, z.size)


def oracle_check(system, noise, sim: SimConfig, n_seeds: int = 20, band=None, target_scale=1.0, n_jobs=1):
    """Pooled 3-sigma check over ``n_seeds`` independent runs."""
    runs = run_seeds(system, noise, sim, n_seeds, n_jobs=n_jobs)
    return summarize(system, noise, sim, runs, band, target_scale)
