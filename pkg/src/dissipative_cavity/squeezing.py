"""Ponderomotive squeezing of the light reflected from port 1.

With ``Z = X_out1 cos(theta) + Y_out1 sin(theta)`` at zero detuning and
without dispersive coupling the spectrum is a 2-theta harmonic

    S_ZZ = 1 + L (M cos^2 theta - N sin theta cos theta)

where ``L`` is the port-matching factor and ``M, N`` collect the position
noise and the position/backaction correlation.  The sign of the ``N`` term
follows from the Langevin and input-output equations used by
:mod:`linres`; flipping it amounts to ``theta -> -theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linres
from .core import CavitySystem, validate
from .errors import OutOfValidityBand

#: factor by which each "much less than" of the asymptotic band must hold
BAND_MARGIN = 10.0
#: relative slack so a point sitting exactly on a margin counts as inside
BAND_SLACK = 1e-9


@dataclass(frozen=True)
class SqueezingTerms:
    L: float
    M: float
    N: float
    n_ba: float
    S0: float


def squeezing_terms(system: CavitySystem, omega) -> SqueezingTerms:
    s = validate(system)
    w = float(omega)
    chi = complex(linres.mech_susceptibility(s, w))
    n_ba = s.n_ba
    L = 4.0 * s.gamma1 * s.gamma2 / (s.kappa**2 + 4.0 * w**2)
    M = 4.0 * n_ba * s.gamma_m**2 * abs(chi) ** 2 * (s.n_th + n_ba + 0.5)
    N = 4.0 * n_ba * s.gamma_m * chi.real
    S0 = (s.n_th + 0.5) / (n_ba + s.n_th + 0.5)
    return SqueezingTerms(L=L, M=M, N=N, n_ba=n_ba, S0=S0)


def _closed_form_regime(s) -> bool:
    return s.detuning == 0.0 and s.g_omega0 == 0.0


def szz(system: CavitySystem, omega, theta) -> float:
    """Symmetrized PSD of the rotated port-1 quadrature (vacuum = 1).

    Outside the closed-form regime (detuned drive or dispersive coupling)
    the engine spectrum is returned instead.
    """
    s = validate(system)
    if not _closed_form_regime(s):
        return float(linres.quadrature_psd(s, None, omega, theta))
    t = squeezing_terms(s, omega)
    c, sn = math.cos(theta), math.sin(theta)
    return 1.0 + t.L * (t.M * c * c - t.N * sn * c)


def optimal_quadrature(system: CavitySystem, omega) -> tuple[float, float]:
    """Angle in ``[0, pi)`` and value of the minimum of :func:`szz` over theta."""
    s = validate(system)
    if not _closed_form_regime(s):
        return _engine_optimum(s, float(omega))
    t = squeezing_terms(s, omega)
    r = math.hypot(t.M, t.N)
    if r == 0.0:
        return 0.0, 1.0
    theta = (0.5 * math.atan2(t.N, -t.M)) % math.pi
    return theta, 1.0 + 0.5 * t.L * (t.M - r)


def _engine_optimum(s, w):
    # S(theta) = a + b cos 2theta + c sin 2theta, from three samples
    s0 = float(linres.quadrature_psd(s, None, w, 0.0))
    s1 = float(linres.quadrature_psd(s, None, w, math.pi / 2))
    s2 = float(linres.quadrature_psd(s, None, w, math.pi / 4))
    a = 0.5 * (s0 + s1)
    b = 0.5 * (s0 - s1)
    c = s2 - a
    r = math.hypot(b, c)
    if r == 0.0:
        return 0.0, a
    return (0.5 * math.atan2(-c, -b)) % math.pi, a - r


def check_band(system: CavitySystem, omega) -> None:
    """Raise :class:`OutOfValidityBand` unless
    ``1 << |w_m - w|/gamma_m << n_th + n_ba, w_m/gamma_m`` with 10x margins."""
    s = validate(system)
    detune = abs(s.omega_m - float(omega)) / s.gamma_m
    limits = {
        "1": (1.0, detune),
        "n_th + n_ba": (detune, s.n_th + s.n_ba),
        "omega_m/gamma_m": (detune, s.omega_m / s.gamma_m),
    }
    for name, (small, large) in limits.items():
        if large < BAND_MARGIN * small * (1.0 - BAND_SLACK):
            raise OutOfValidityBand(
                f"|omega_m - omega|/gamma_m = {detune:.4g} violates the band condition against {name}"
            )


def asymptotic_min(system: CavitySystem, omega) -> float:
    """Broadband squeezing floor ``S0 + (1 - S0)(1 - L)``."""
    check_band(system, omega)
    t = squeezing_terms(system, omega)
    return t.S0 + (1.0 - t.S0) * (1.0 - t.L)


def cooperativity(system: CavitySystem, omega) -> tuple[float, float, float]:
    """Two-port ``n_ba``, single-port ``n_ba1`` and their ratio ``(2w/gamma2)^2``."""
    s = validate(system)
    ratio = (2.0 * float(omega) / s.gamma2) ** 2
    n_ba = s.n_ba
    return n_ba, n_ba * ratio, ratio


def szz_grid(system: CavitySystem, omega, theta):
    """Vectorized closed form over broadcast ``omega`` and ``theta`` arrays."""
    s = validate(system)
    w = np.asarray(omega, dtype=float)
    th = np.asarray(theta, dtype=float)
    chi = linres.mech_susceptibility(s, w)
    n_ba = s.n_ba
    L = 4.0 * s.gamma1 * s.gamma2 / (s.kappa**2 + 4.0 * w**2)
    M = 4.0 * n_ba * s.gamma_m**2 * np.abs(chi) ** 2 * (s.n_th + n_ba + 0.5)
    N = 4.0 * n_ba * s.gamma_m * chi.real
    return 1.0 + L * (M * np.cos(th) ** 2 - N * np.sin(th) * np.cos(th))
