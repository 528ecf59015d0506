"""Frequency-domain linear response of the cavity + oscillator.

Unknowns per frequency are the intracavity quadratures ``X, Y`` and the
normalized position ``q = x / x_zpf``; they obey

.. code-block:: text

    (k/2 - iw) X + D Y - G_g q           = sqrt(g1)/2 X_in1 + sqrt(g2)/2 X_in2
    (k/2 - iw) Y - D X - G_w q           = sqrt(g1)/2 Y_in1 + sqrt(g2)/2 Y_in2
    chi^-1 q - 2 G_w X                   = sqrt(gm) W - G_g/sqrt(g2) Y_in2

with ``k = g1 + g2``, ``D`` the detuning and ``G_g, G_w`` the couplings per
zero-point amplitude.  Outputs follow from the input-output relations, the
port-2 amplitude relation carrying the extra ``-(2/sqrt(g2)) G_g q`` term.

All functions accept a scalar or an array of frequencies and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import VACUUM, CavitySystem, NoiseModel, validate
from .errors import SingularSystem, UnknownOutputIndex

#: row labels of a transfer matrix
OUTPUTS = ("X_out1", "Y_out1", "X_out2", "Y_out2", "q", "F")
#: column labels of a transfer matrix
INPUTS = ("X_in1", "Y_in1", "X_in2", "Y_in2", "W")

X_OUT1, Y_OUT1, X_OUT2, Y_OUT2, POSITION, FORCE = range(6)
X_IN1, Y_IN1, X_IN2, Y_IN2, THERMAL = range(5)


@dataclass(frozen=True)
class TransferMatrix:
    """Closed-loop response at one frequency (or a stack of frequencies).

    ``entries[..., i, j]`` is the response of output ``OUTPUTS[i]`` to input
    ``INPUTS[j]``.  Position is reported as ``x / x_zpf`` and force as
    ``F / hbar``.

    ``signal[..., i]`` is the open-loop response of output ``i`` to a unit
    absolute displacement ``x`` treated as an external drive; this is the
    transduction coefficient used for imprecision and wasted information.
    """

    omega: np.ndarray
    entries: np.ndarray
    signal: np.ndarray

    def entry(self, output: int | str, inp: int | str):
        return self.entries[..., _index(output, OUTPUTS), _index(inp, INPUTS)]

    def quadrature(self, theta, port: int = 1):
        """Rows of ``Z = X cos(theta) + Y sin(theta)`` of the given port.

        Returns ``(noise_row, signal)`` with shapes ``(..., 5)`` and ``(...)``.
        """
        xi, yi = (X_OUT1, Y_OUT1) if port == 1 else (X_OUT2, Y_OUT2)
        c = np.cos(np.asarray(theta, dtype=float))
        s = np.sin(np.asarray(theta, dtype=float))
        row = c[..., None] * self.entries[..., xi, :] + s[..., None] * self.entries[..., yi, :]
        sig = c * self.signal[..., xi] + s * self.signal[..., yi]
        return row, sig


def _index(key, labels) -> int:
    if isinstance(key, str):
        try:
            return labels.index(key)
        except ValueError:
            raise UnknownOutputIndex(f"unknown label {key!r}; expected one of {labels}") from None
    if not 0 <= int(key) < len(labels):
        raise UnknownOutputIndex(f"index {key} out of range for {labels}")
    return int(key)


def mech_susceptibility(system: CavitySystem, omega):
    """chi(w) = 2 w_m / (w_m^2 - w^2 - i gamma_m w)."""
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    return 2.0 * s.omega_m / (s.omega_m**2 - w**2 - 1j * s.gamma_m * w)


def _optical_block(s, w):
    a = 0.5 * s.kappa - 1j * w
    return a, s.detuning


def _output_maps(s):
    """Output = C_u @ (X, Y, q) + D @ inputs."""
    sg1, sg2 = np.sqrt(s.gamma1), np.sqrt(s.gamma2)
    C = np.zeros((6, 3))
    D = np.zeros((6, 5))
    C[X_OUT1, 0] = 2 * sg1
    D[X_OUT1, X_IN1] = -1.0
    C[Y_OUT1, 1] = 2 * sg1
    D[Y_OUT1, Y_IN1] = -1.0
    C[X_OUT2, 0] = 2 * sg2
    C[X_OUT2, 2] = -2.0 * s.G_gamma / sg2
    D[X_OUT2, X_IN2] = -1.0
    C[Y_OUT2, 1] = 2 * sg2
    D[Y_OUT2, Y_IN2] = -1.0
    C[POSITION, 2] = 1.0
    C[FORCE, 0] = 2.0 * s.G_omega_a
    D[FORCE, Y_IN2] = -s.G_gamma_a / sg2
    return C, D


def _source_matrix(s):
    """Right-hand side of the three coupled equations per unit input."""
    sg1, sg2 = np.sqrt(s.gamma1), np.sqrt(s.gamma2)
    R = np.zeros((3, 5))
    R[0, X_IN1] = 0.5 * sg1
    R[0, X_IN2] = 0.5 * sg2
    R[1, Y_IN1] = 0.5 * sg1
    R[1, Y_IN2] = 0.5 * sg2
    R[2, Y_IN2] = -s.G_gamma / sg2
    R[2, THERMAL] = np.sqrt(s.gamma_m)
    return R


def _signal(s, w):
    """Open-loop output response to unit absolute displacement."""
    a, det = _optical_block(s, w)
    den = a * a + det * det
    X = (a * s.G_gamma_a - det * s.G_omega_a) / den
    Y = (a * s.G_omega_a + det * s.G_gamma_a) / den
    sg1, sg2 = np.sqrt(s.gamma1), np.sqrt(s.gamma2)
    out = np.zeros(np.shape(w) + (6,), dtype=complex)
    out[..., X_OUT1] = 2 * sg1 * X
    out[..., Y_OUT1] = 2 * sg1 * Y
    out[..., X_OUT2] = 2 * sg2 * X - 2.0 * s.G_gamma_a / sg2
    out[..., Y_OUT2] = 2 * sg2 * Y
    out[..., POSITION] = 1.0 / s.x_zpf
    out[..., FORCE] = 2.0 * s.G_omega_a * X
    return out


def transfer_matrix(system: CavitySystem, omega) -> TransferMatrix:
    """Solve the coupled cavity/oscillator equations at ``omega``.

    A dense 3x3 complex solve per frequency; ``omega`` may be an array.
    """
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    a, det = _optical_block(s, w)
    chi_inv = 1.0 / mech_susceptibility(s, w)

    M = np.zeros(w.shape + (3, 3), dtype=complex)
    M[..., 0, 0] = a
    M[..., 0, 1] = det
    M[..., 0, 2] = -s.G_gamma
    M[..., 1, 0] = -det
    M[..., 1, 1] = a
    M[..., 1, 2] = -s.G_omega
    M[..., 2, 0] = -2.0 * s.G_omega
    M[..., 2, 2] = chi_inv

    R = np.broadcast_to(_source_matrix(s), w.shape + (3, 5))
    try:
        U = np.linalg.solve(M, R)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(U)):
        raise SingularSystem("non-finite response")

    C, D = _output_maps(s)
    entries = C @ U + D
    return TransferMatrix(omega=w, entries=entries, signal=_signal(s, w))


def open_loop(system: CavitySystem, omega):
    """Output response to the inputs with the position clamped at zero.

    Returns an array ``(..., 6, 5)``.  Only the optical and force rows are
    meaningful; this is the noise that accompanies the signal in a
    measurement, and the force noise that drives the oscillator.
    """
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    a, det = _optical_block(s, w)
    den = a * a + det * det
    R = _source_matrix(s)[:2]
    # inverse of [[a, det], [-det, a]]
    inv = np.empty(w.shape + (2, 2), dtype=complex)
    inv[..., 0, 0] = a / den
    inv[..., 0, 1] = -det / den
    inv[..., 1, 0] = det / den
    inv[..., 1, 1] = a / den
    U = np.zeros(w.shape + (3, 5), dtype=complex)
    U[..., :2, :] = inv @ R
    C, D = _output_maps(s)
    out = C @ U + D
    out[..., POSITION, :] = 0.0
    return out


def closed_loop_susceptibility(system: CavitySystem, omega):
    """Effective susceptibility including any radiation-pressure loop.

    Read off the closed-loop solve as the position response to the thermal
    input divided by ``sqrt(gamma_m)``.
    """
    s = validate(system)
    T = transfer_matrix(s, omega)
    return T.entries[..., POSITION, THERMAL] / np.sqrt(s.gamma_m)


def _check_psd_output(output_index):
    return _index(output_index, OUTPUTS)


def output_psd(system: CavitySystem, noise: NoiseModel | None, omega, output_index):
    """Symmetrized two-sided PSD of one output.

    Inputs are mutually uncorrelated in the symmetrized sense, so the result
    is ``sum_j |T_ij|^2 S_j``.
    """
    idx = _check_psd_output(output_index)
    s = validate(system)
    noise = noise or VACUUM
    T = transfer_matrix(s, omega)
    S_in = np.asarray(noise.input_psd(s))
    return np.abs(T.entries[..., idx, :]) ** 2 @ S_in


def quadrature_psd(system: CavitySystem, noise: NoiseModel | None, omega, theta, port: int = 1):
    """PSD of ``X_out cos(theta) + Y_out sin(theta)`` of ``port``."""
    s = validate(system)
    noise = noise or VACUUM
    T = transfer_matrix(s, omega)
    row, _ = T.quadrature(np.asarray(theta, dtype=float), port=port)
    return np.abs(row) ** 2 @ np.asarray(noise.input_psd(s))


def feedthrough_psd(system: CavitySystem, noise: NoiseModel | None, output_index):
    """High-frequency limit of an output PSD (direct input feed-through)."""
    idx = _check_psd_output(output_index)
    s = validate(system)
    noise = noise or VACUUM
    _, D = _output_maps(s)
    return float(np.abs(D[idx]) ** 2 @ np.asarray(noise.input_psd(s)))
