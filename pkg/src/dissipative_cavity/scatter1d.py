"""One-dimensional three-mirror cavity with a lossy tilted middle mirror.

Input mirror (transmission ``tau``), middle mirror half-way (reflection
``r = r0 + delta_r``, transmission ``t``) and a perfect end mirror.  With
``u = exp(-2ikl)`` the resonance condition is

    (u/rho - r)(u - r) + t^2 = 0   ->   u = X(r, rho)

and the two roots are the two branches of the spectrum.  Results are in the
units implied by ``c`` and ``l``; with ``c = l = 1`` they are in units of
``c/l``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousRegime, BranchDiscontinuity

PERTURBATIVE_WARN = 0.1
HOMOTOPY_STEPS = 16
#: t/r0 and tau^2 closer than this factor -> neither coupling-rate limit applies
REGIME_FACTOR = 3.0


@dataclass(frozen=True)
class ScatterConfig:
    r0: float
    delta_r: float = 0.0
    tau: float = 0.0
    l: float = 1.0
    c: float = 1.0
    branch: str = "plus"
    order: int = 1
    t: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.r0 < 1.0:
            raise ValueError(f"r0 must lie in (0, 1), got {self.r0}")
        if self.delta_r > 0.0:
            raise ValueError("delta_r must be <= 0 (tilt only adds loss)")
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        if self.l <= 0 or self.c <= 0:
            raise ValueError("l and c must be positive")
        if self.branch not in ("plus", "minus"):
            raise ValueError("branch must be 'plus' or 'minus'")
        object.__setattr__(self, "t", math.sqrt(1.0 - self.r0**2))
        if abs(self.delta_r) > PERTURBATIVE_WARN or self.tau**2 > PERTURBATIVE_WARN:
            warnings.warn("delta_r or tau^2 is not small; first-order formulas degrade", stacklevel=2)

    @property
    def rho(self) -> float:
        return math.sqrt(1.0 - self.tau**2)

    @property
    def r(self) -> float:
        return self.r0 + self.delta_r

    @property
    def sign(self) -> int:
        return 1 if self.branch == "plus" else -1


@dataclass(frozen=True)
class ScatterResult:
    k: complex
    delta_k: complex
    delta_k_linear: complex
    delta_omega_c: float
    decay: float
    gamma_r: float
    gamma_rho: float


def lossless_resonance(r0: float, l: float, n: int = 0) -> float:
    """Real resonant wavevector with ``cos(2 k l) = r0``: arccos(r0)/(2l) + pi n/l."""
    if not 0.0 <= r0 < 1.0:
        raise ValueError("r0 must lie in [0, 1)")
    return math.acos(r0) / (2.0 * l) + math.pi * n / l


def x_roots(r: float, rho: float, t: float) -> tuple[complex, complex]:
    """Both roots (+, -) of the resonance condition in ``u = exp(-2ikl)``."""
    disc = cmath.sqrt(complex(r * r * (1.0 - rho) ** 2 - 4.0 * rho * t * t, 0.0))
    base = r * (1.0 + rho)
    return 0.5 * (base + disc), 0.5 * (base - disc)


def _lossless_x(r0: float, t: float, sign: int) -> complex:
    return complex(r0, sign * t)


def track_branch(config: ScatterConfig, steps: int = HOMOTOPY_STEPS) -> complex:
    """Follow the selected root from the lossless point to ``config``.

    The path is a straight line in ``(r, rho)``; at every step the root
    closest to the previous one is kept.  If the other root is not clearly
    farther away the branches are not separable along the path.
    """
    x = _lossless_x(config.r0, config.t, config.sign)
    for i in range(1, steps + 1):
        f = i / steps
        r = config.r0 + f * config.delta_r
        rho = 1.0 + f * (config.rho - 1.0)
        a, b = x_roots(r, rho, config.t)
        da, db = abs(a - x), abs(b - x)
        near, d_near, d_far = (a, da, db) if da <= db else (b, db, da)
        if d_near > 0.5 * d_far:
            raise BranchDiscontinuity(
                f"branches are not separable at step {i}/{steps} (|dX| = {d_near:.3g} vs {d_far:.3g})"
            )
        x = near
    return x


def _delta_k(x: complex, x0: complex, l: float) -> complex:
    # exact: exp(-2i dk l) = x/x0
    return 0.5j / l * cmath.log(x / x0)


def solve_resonance(config: ScatterConfig) -> ScatterResult:
    """Complex resonance on the selected branch.

    ``delta_k`` is the exact shift ``(i/2l) ln(X/X0)``;
    ``delta_k_linear`` is its small-shift form ``-(i/2l)(1 - X/X0)``.
    The decay rate is split into the part already present with the middle
    mirror untilted (``gamma_rho``) and the remainder (``gamma_r``).
    """
    s = config.sign
    x0 = _lossless_x(config.r0, config.t, s)
    x = track_branch(config)
    dk = _delta_k(x, x0, config.l)
    dk_lin = -0.5j / config.l * (1.0 - x / x0)
    k_c = (2.0 * math.pi * config.order - s * math.acos(config.r0)) / (2.0 * config.l)
    decay = -2.0 * config.c * dk.imag
    if config.delta_r != 0.0 and config.tau != 0.0:
        untilted = ScatterConfig(config.r0, 0.0, config.tau, config.l, config.c, config.branch, config.order)
        gamma_rho = solve_resonance(untilted).decay
    elif config.delta_r == 0.0:
        gamma_rho = decay
    else:
        gamma_rho = 0.0
    return ScatterResult(
        k=k_c + dk,
        delta_k=dk,
        delta_k_linear=dk_lin,
        delta_omega_c=config.c * dk.real,
        decay=decay,
        gamma_r=decay - gamma_rho,
        gamma_rho=gamma_rho,
    )


def tilt_response(r0: float, t: float, l: float, c: float, delta_r: float, branch: str = "plus"):
    """First-order tilt response ``(delta_omega_c, gamma_r)``.

    ``delta_omega_c = +-c delta_r t / (2l)`` and ``gamma_r = -c delta_r r0 / l``.
    """
    if delta_r > 0:
        raise ValueError("delta_r must be <= 0")
    sign = 1 if branch == "plus" else -1
    return sign * c * delta_r * t / (2.0 * l), -c * delta_r * r0 / l


def shift_to_halfwidth_ratio(r0: float, t: float) -> float:
    """|delta_omega_c| / (gamma_r / 2) = t / r0."""
    return t / r0


def shift_to_decay_ratio(r0: float, t: float) -> float:
    """|delta_omega_c| / gamma_r = t / (2 r0)."""
    return t / (2.0 * r0)


@dataclass(frozen=True)
class InputPortDecay:
    general: float
    limit: float | None
    regime: str


def coupling_regime(config: ScatterConfig) -> str:
    ratio = config.t / config.r0
    tau2 = config.tau**2
    if ratio > REGIME_FACTOR * tau2:
        return "middle-transmissive"
    if ratio * REGIME_FACTOR < tau2:
        return "middle-opaque"
    return "ambiguous"


def coupling_rate_limit(config: ScatterConfig) -> float:
    """Asymptotic input-port coupling rate for the detected regime."""
    regime = coupling_regime(config)
    if regime == "middle-transmissive":
        return config.c * config.tau**2 / (4.0 * config.l)
    if regime == "middle-opaque":
        return config.c * config.tau**2 / (2.0 * config.l)
    raise AmbiguousRegime(f"t/r0 = {config.t / config.r0:.3g} is within x{REGIME_FACTOR} of tau^2 = {config.tau**2:.3g}")


def input_port_decay(config: ScatterConfig) -> InputPortDecay:
    """Decay through the input mirror with the middle mirror untilted.

    Both roots are evaluated directly and the larger decay rate is taken:
    that mode has the largest weight in the input sub-cavity.  When the
    middle mirror is nearly opaque the two roots pass through a degeneracy
    on the way from the lossless point, so no continuity tracking is done.
    """
    if config.delta_r != 0.0:
        raise ValueError("input_port_decay requires delta_r = 0")
    # |u| = exp(2 l Im k) and decay = -2 c Im k
    general = max(-config.c / config.l * math.log(abs(x)) for x in x_roots(config.r0, config.rho, config.t))
    regime = coupling_regime(config)
    limit = None if regime == "ambiguous" else coupling_rate_limit(config)
    return InputPortDecay(general=general, limit=limit, regime=regime)


def mixed_term(config: ScatterConfig) -> complex:
    """Interference part of the shift: dk(dr, rho) - dk(dr, 1) - dk(0, rho)."""
    base = dict(r0=config.r0, l=config.l, c=config.c, branch=config.branch, order=config.order)
    both = solve_resonance(config).delta_k
    tilt = solve_resonance(ScatterConfig(delta_r=config.delta_r, tau=0.0, **base)).delta_k
    loss = solve_resonance(ScatterConfig(delta_r=0.0, tau=config.tau, **base)).delta_k
    return both - tilt - loss


def branch_path(config: ScatterConfig, n: int = 64) -> np.ndarray:
    """Resonance wavevector along the straight path from the lossless point."""
    out = []
    for i in range(n + 1):
        f = i / n
        tau = math.sqrt(1.0 - (1.0 + f * (config.rho - 1.0)) ** 2)
        cfg = ScatterConfig(config.r0, f * config.delta_r, tau, config.l, config.c, config.branch, config.order)
        out.append(solve_resonance(cfg).k)
    return np.array(out)
