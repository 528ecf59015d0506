"""Imprecision, backaction and their product for position readout on port 1.

Closed forms hold at zero detuning (and, for mixed coupling, at matched
port rates in the bad-cavity limit).  Everywhere else the same quantities
are taken from the linear-response engine, with the homodyne angle chosen
to minimize imprecision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import linres
from .core import VACUUM, CavitySystem, NoiseModel, validate
from .errors import NoCoupling, ZeroSignalTransfer


@dataclass(frozen=True)
class ProductResult:
    """Backaction-imprecision product in units of hbar**2/4."""

    value_norm: float
    omega: float
    gamma_ratio: float
    xi: float
    method: str = "closed"


def _closed_form_regime(s) -> bool:
    return s.detuning == 0.0 and s.g_omega0 == 0.0


def imprecision_psd(system: CavitySystem, omega):
    """Equivalent displacement noise of the port-1 readout (units of m**2 s).

    At zero detuning and without dispersive coupling this is
    ``((g1+g2)^2/4 + w^2) / (4 g1 G^2)``; otherwise the engine value at the
    optimal homodyne angle is returned.
    """
    s = validate(system)
    if not _closed_form_regime(s):
        return engine_imprecision(s, omega)[0]
    if s.G_gamma_a == 0.0:
        raise ZeroSignalTransfer("position is unobservable in X_out1 without dissipative coupling")
    w = np.asarray(omega, dtype=float)
    return ((0.5 * s.kappa) ** 2 + w**2) / (4.0 * s.gamma1 * s.G_gamma_a**2)


def backaction_psd(system: CavitySystem, omega=0.0):
    """Quantum backaction force PSD in units of hbar**2.

    Pure dissipative coupling gives ``G^2 / gamma2`` at any frequency.  With
    both couplings at zero detuning and matched ports the bad-cavity value
    ``a0^2 (g_gamma0^2 + 2 g_omega0^2) / gamma`` is returned.  Other
    parameter sets go through the engine.
    """
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    if s.g_omega0 == 0.0:
        return np.full(w.shape, s.G_gamma_a**2 / s.gamma2)[()]
    if s.detuning == 0.0 and s.gamma1 == s.gamma2:
        val = s.a0**2 * (s.g_gamma0**2 + 2.0 * s.g_omega0**2) / s.gamma1
        return np.full(w.shape, val)[()]
    return engine_backaction(s, w)


def engine_backaction(system: CavitySystem, omega, noise: NoiseModel | None = None):
    """Force noise with the oscillator clamped (engine path), units hbar**2."""
    s = validate(system)
    noise = noise or VACUUM
    T = linres.open_loop(s, omega)
    return np.abs(T[..., linres.FORCE, :]) ** 2 @ np.asarray(noise.input_psd(s))


def _quadratic_forms(s, omega, noise):
    """2x2 forms so that noise(th) = u.P.u and |signal(th)|^2 = u.Q.u, u = (cos, sin)."""
    w = float(omega)
    T = linres.open_loop(s, w)
    sig = linres.transfer_matrix(s, w).signal
    S_in = np.asarray(noise.input_psd(s))
    A = T[[linres.X_OUT1, linres.Y_OUT1], :]
    P = np.real((A * S_in) @ A.conj().T)
    b = sig[[linres.X_OUT1, linres.Y_OUT1]]
    Q = np.real(np.outer(b, b.conj()))
    return P, Q


def engine_imprecision(system: CavitySystem, omega, theta=None, noise: NoiseModel | None = None):
    """Imprecision from the engine: (noise PSD) / |signal|^2 of a port-1 quadrature.

    With ``theta=None`` the angle minimizing the ratio is found from the
    2x2 generalized eigenproblem of the two quadratic forms in
    ``(cos theta, sin theta)``.  Returns ``(S_imp, theta)`` with
    ``theta`` in ``[0, pi)``.
    """
    s = validate(system)
    noise = noise or VACUUM
    P, Q = _quadratic_forms(s, omega, noise)
    if theta is None:
        vals, vecs = linalg.eigh(Q, P)
        lam = vals[-1]
        if not lam > 0.0:
            raise ZeroSignalTransfer("no quadrature of port 1 carries the position signal")
        u = vecs[:, -1]
        theta = math.atan2(u[1], u[0]) % math.pi
        return 1.0 / lam, theta
    u = np.array([math.cos(theta), math.sin(theta)])
    sig2 = u @ Q @ u
    if not sig2 > 0.0:
        raise ZeroSignalTransfer(f"quadrature theta={theta} carries no position signal")
    return (u @ P @ u) / sig2, theta


def ba_imp_product(system: CavitySystem, omega=0.0) -> ProductResult:
    """S_xx^imp * S_FF normalized to hbar**2/4.

    * no dispersive coupling, zero detuning:
      ``((g1+g2)^2 + 4 w^2) / (4 g1 g2)``
    * both couplings, zero detuning, ``g1 == g2``: the bad-cavity value
      ``(1 + 2 xi^2) / (1 + xi^2)`` at the optimal quadrature (``omega`` is
      recorded but the limit omega -> 0 is reported)
    * anything else: :func:`ba_imp_product_engine`.
    """
    s = validate(system)
    w = float(omega)
    ratio = s.gamma2 / s.gamma1
    if s.detuning == 0.0 and s.g_omega0 == 0.0:
        if s.g_gamma0 == 0.0:
            raise ZeroSignalTransfer("no coupling, no position signal")
        val = (s.kappa**2 + 4.0 * w**2) / (4.0 * s.gamma1 * s.gamma2)
        return ProductResult(val, w, ratio, 0.0)
    if s.detuning == 0.0 and s.gamma1 == s.gamma2:
        return ProductResult(mixed_product(s.g_gamma0, s.g_omega0), w, ratio, s.xi)
    return ba_imp_product_engine(s, w)


def mixed_product(g_gamma0: float, g_omega0: float) -> float:
    """(g_gamma0^2 + 2 g_omega0^2) / (g_gamma0^2 + g_omega0^2), i.e. (1+2xi^2)/(1+xi^2)."""
    num = g_gamma0**2 + 2.0 * g_omega0**2
    den = g_gamma0**2 + g_omega0**2
    if den == 0.0:
        raise NoCoupling("both couplings are zero")
    return num / den


def ba_imp_product_engine(system: CavitySystem, omega, noise: NoiseModel | None = None) -> ProductResult:
    s = validate(system)
    w = float(omega)
    s_imp, _ = engine_imprecision(s, w, noise=noise)
    s_ff = float(engine_backaction(s, w, noise=noise))
    return ProductResult(4.0 * s_imp * s_ff, w, s.gamma2 / s.gamma1, s.xi, method="engine")


def optimal_homodyne_angle(system: CavitySystem) -> float:
    """Quadrature angle whose orthogonal partner carries no position signal.

    Valid at zero detuning with matched ports, where the answer is
    ``atan(g_omega0 / g_gamma0)`` folded into ``[0, pi)``.
    """
    s = validate(system)
    if s.g_gamma0 == 0.0 and s.g_omega0 == 0.0:
        raise NoCoupling("both couplings are zero")
    return math.atan2(s.g_omega0, s.g_gamma0) % math.pi


def wasted_information(system: CavitySystem, omega):
    """Coefficient of ``x`` in ``X_out2`` (zero detuning, no dispersive coupling).

    ``2 G (g2 - g1 + 2iw) / (sqrt(g2) (g2 + g1 - 2iw))``
    """
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    g1, g2 = s.gamma1, s.gamma2
    return 2.0 * s.G_gamma_a / math.sqrt(g2) * (g2 - g1 + 2j * w) / (g2 + g1 - 2j * w)


def transmittance(gamma1: float, gamma2: float) -> float:
    """Bad-cavity amplitude transmittance 2 sqrt(g1 g2) / (g1 + g2)."""
    return 2.0 * math.sqrt(gamma1 * gamma2) / (gamma1 + gamma2)


def transmittance_sensitivity(gamma1: float, gamma2: float) -> float:
    """dT/dgamma2; multiply by dgamma2/dx for the displacement sensitivity."""
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("decay rates must be positive")
    return math.sqrt(gamma1) * (gamma1 - gamma2) / (math.sqrt(gamma2) * (gamma1 + gamma2) ** 2)
