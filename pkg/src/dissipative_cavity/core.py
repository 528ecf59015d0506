"""Parameter containers for the two-port cavity with position-dependent loss.

Conventions
-----------
* All rates are angular frequencies in whatever unit the caller picks
  (``gamma1 = 1`` is the usual choice).
* Force spectra are expressed in units of hbar**2 and backaction-imprecision
  products in units of hbar**2/4, so Planck's constant never appears.
* ``gamma2`` is the loss-port decay rate at the working point.  Motion shifts
  it to ``gamma2 - 2 * g_gamma0 * x``; only the linear term is ever used.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

from .errors import NegativeOccupation, NonPositiveRate, OverdampedOscillator

#: ratio gamma_m / omega_m above which the weak-damping assumption is flagged
DAMPING_WARN_RATIO = 0.1


@dataclass(frozen=True)
class CavitySystem:
    """Optical, coupling and mechanical parameters of the linearized model."""

    gamma1: float
    gamma2: float
    detuning: float = 0.0
    g_gamma0: float = 0.0
    g_omega0: float = 0.0
    a0: float = 1.0
    omega_m: float = 1.0
    gamma_m: float = 1e-3
    n_th: float = 0.0
    x_zpf: float = 1.0

    def replace(self, **changes) -> "CavitySystem":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ValidatedSystem(CavitySystem):
    """A :class:`CavitySystem` whose invariants have been checked.

    The derived couplings are plain properties of the fields:
    ``G_gamma_a = g_gamma0 * a0`` is the intracavity-enhanced dissipative
    coupling (per metre) and ``G_gamma = g_gamma0 * x_zpf * a0`` the same
    thing per zero-point amplitude; likewise for the dispersive pair.
    """

    @property
    def kappa(self) -> float:
        """Total cavity decay rate gamma1 + gamma2."""
        return self.gamma1 + self.gamma2

    @property
    def G_gamma_a(self) -> float:
        return self.g_gamma0 * self.a0

    @property
    def G_omega_a(self) -> float:
        return self.g_omega0 * self.a0

    @property
    def G_gamma(self) -> float:
        return self.g_gamma0 * self.x_zpf * self.a0

    @property
    def G_omega(self) -> float:
        return self.g_omega0 * self.x_zpf * self.a0

    @property
    def xi(self) -> float:
        """Dispersive-to-dissipative coupling ratio g_omega0 / g_gamma0."""
        if self.g_gamma0 == 0.0:
            return math.inf if self.g_omega0 != 0.0 else 0.0
        return self.g_omega0 / self.g_gamma0

    @property
    def n_ba(self) -> float:
        """Backaction phonon occupation (two-port cooperativity)."""
        return self.G_gamma**2 / (self.gamma_m * self.gamma2)


def validate(system: CavitySystem) -> ValidatedSystem:
    """Check the parameter invariants and return a :class:`ValidatedSystem`.

    Idempotent: an already validated system is returned unchanged.
    """
    if isinstance(system, ValidatedSystem):
        return system

    for name in ("gamma1", "gamma2", "gamma_m", "omega_m", "x_zpf"):
        value = getattr(system, name)
        if not (value > 0.0) or not math.isfinite(value):
            raise NonPositiveRate(f"{name} must be positive and finite, got {value!r}")
    for name in ("detuning", "g_gamma0", "g_omega0"):
        if not math.isfinite(getattr(system, name)):
            raise ValueError(f"{name} must be finite")
    if not (system.a0 >= 0.0) or not math.isfinite(system.a0):
        raise ValueError(f"a0 must be real and >= 0, got {system.a0!r}")
    if not (system.n_th >= 0.0) or not math.isfinite(system.n_th):
        raise NegativeOccupation(f"n_th must be >= 0, got {system.n_th!r}")
    if system.gamma_m >= system.omega_m:
        raise OverdampedOscillator(
            f"gamma_m ({system.gamma_m}) must be smaller than omega_m ({system.omega_m})"
        )
    if system.gamma_m / system.omega_m > DAMPING_WARN_RATIO:
        warnings.warn(
            f"gamma_m/omega_m = {system.gamma_m / system.omega_m:.3g} is not small; "
            "the high-Q approximations used in the closed forms degrade",
            stacklevel=2,
        )
    return ValidatedSystem(**dataclasses.asdict(system))


@dataclass(frozen=True)
class NoiseModel:
    """Two-sided symmetrized input spectra.

    Vacuum gives 1 for every optical input quadrature.  The classical excess
    of the drive laser is added on port 1 only; port 2 is always vacuum and
    the thermal force spectrum ``n_th + 1/2`` comes from the system.
    """

    laser_amp_excess: float = 0.0
    laser_phase_excess: float = 0.0

    def __post_init__(self):
        if self.laser_amp_excess < 0 or self.laser_phase_excess < 0:
            raise ValueError("classical excess noise must be >= 0")

    def input_psd(self, system: CavitySystem):
        """PSDs of (X_in1, Y_in1, X_in2, Y_in2, W), in that order."""
        return (
            1.0 + self.laser_amp_excess,
            1.0 + self.laser_phase_excess,
            1.0,
            1.0,
            system.n_th + 0.5,
        )


VACUUM = NoiseModel()
