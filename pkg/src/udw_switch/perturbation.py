"""First-order field states left behind by two sharply switched detectors.

For the order where the detector at ``x2`` fires first (window ``(0, T)``) and
the one at ``x1`` second (window ``(dtau, dtau + T)``), the one-particle
amplitude of mode ``k`` is

    c_k = -lam * (exp(i T a_k) - 1) / a_k * (exp(i dtau a_k) u_k(x1) + u_k(x2)),

with ``a_k = omega_k + Omega``. The opposite order swaps ``x1`` and ``x2``.
Everything downstream (overlap, entanglement) is built from these vectors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .cavity import CavityConfig, SingleExcitationState
from .errors import ConvergenceError, DegenerateStateError, DomainError
from .kinematics import InteractionRegions

log = logging.getLogger(__name__)

# Relative size below which sin(T a / 2) counts as an exact zero of the
# switching factor (floating-point evaluation of an integer multiple of pi).
_RESONANCE_RTOL = 64 * np.finfo(float).eps


class Order(str, Enum):
    RIGHT_FIRST = "right_first"
    LEFT_FIRST = "left_first"


@dataclass(frozen=True)
class ProtocolParams:
    """One wing of the experiment: cavity, detector placement and timing, gap, coupling.

    ``coupling`` is assumed perturbatively small; nothing here checks that.
    """

    cavity: CavityConfig
    regions: InteractionRegions
    energy_gap: float
    coupling: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.energy_gap) and self.energy_gap > 0):
            raise DomainError(f"energy gap must be positive, got {self.energy_gap}")
        if not (math.isfinite(self.coupling) and self.coupling > 0):
            raise DomainError(f"coupling must be positive, got {self.coupling}")
        for x in (self.regions.x1, self.regions.x2):
            if not 0.0 <= x <= self.cavity.length:
                raise DomainError(f"detector position {x} outside [0, {self.cavity.length}]")

    def replace(self, **changes) -> "ProtocolParams":
        """Copy with top-level fields or region/cavity fields overridden by name."""
        region_keys = {"x1", "x2", "delta_tau", "duration"}
        cavity_keys = {"length", "mass", "n_modes"}
        regions = replace(self.regions, **{k: changes.pop(k) for k in list(changes) if k in region_keys})
        cavity = replace(self.cavity, **{k: changes.pop(k) for k in list(changes) if k in cavity_keys})
        return replace(self, cavity=cavity, regions=regions, **changes)


@dataclass(frozen=True)
class OverlapResult:
    """Normalized overlap of the two field states plus truncation diagnostics.

    ``norm`` is the common norm of both unnormalized states divided by the
    coupling. ``tail_estimate`` bounds the change of the overlap from modes
    beyond ``n_modes_used``; it is infinite when ``resonant_limit`` is set,
    because the limiting amplitudes are not square-summable.
    """

    overlap: complex
    norm: float
    n_modes_used: int
    tail_estimate: float
    resonant_limit: bool = False

    @property
    def magnitude(self) -> float:
        return abs(self.overlap)

    @property
    def phase(self) -> float:
        return math.atan2(self.overlap.imag, self.overlap.real)


def _gap_frequencies(p: ProtocolParams) -> np.ndarray:
    return p.cavity.frequencies() + p.energy_gap


def window_factor(p: ProtocolParams) -> np.ndarray:
    """``(exp(i T a) - 1) / a`` per mode, i.e. the time integral over one window."""
    a = _gap_frequencies(p)
    half = 0.5 * p.regions.duration * a
    return 2j * np.exp(1j * half) * np.sin(half) / a


def _is_resonant(p: ProtocolParams) -> bool:
    half = 0.5 * p.regions.duration * _gap_frequencies(p)
    return bool(np.all(np.abs(np.sin(half)) <= _RESONANCE_RTOL * np.maximum(1.0, half)))


def detector_amplitudes(p: ProtocolParams, order: Order | str = Order.RIGHT_FIRST
                        ) -> tuple[SingleExcitationState, SingleExcitationState]:
    """Field states conditioned on which detector got excited.

    Returns ``(phi_ge, phi_eg)``: ``ge`` means the detector at ``x2`` is
    excited, ``eg`` the detector at ``x1``.
    """
    order = Order(order)
    cav = p.cavity
    u1 = cav.mode_values(p.regions.x1)
    u2 = cav.mode_values(p.regions.x2)
    f = -p.coupling * window_factor(p)
    delay = np.exp(1j * p.regions.delta_tau * _gap_frequencies(p))
    if order is Order.RIGHT_FIRST:
        ge, eg = f * u2, f * delay * u1
    else:
        eg, ge = f * u1, f * delay * u2
    return SingleExcitationState(ge), SingleExcitationState(eg)


def phi_amplitudes(p: ProtocolParams, order: Order | str = Order.RIGHT_FIRST) -> SingleExcitationState:
    """Unnormalized first-order field state for the given firing order."""
    ge, eg = detector_amplitudes(p, order)
    return ge + eg


def _limit_amplitudes(p: ProtocolParams) -> tuple[np.ndarray, np.ndarray]:
    # All switching factors vanish: the leading term in T is i*exp(i T a) per mode.
    a = _gap_frequencies(p)
    f = 1j * np.exp(1j * p.regions.duration * a)
    delay = np.exp(1j * p.regions.delta_tau * a)
    u1 = p.cavity.mode_values(p.regions.x1)
    u2 = p.cavity.mode_values(p.regions.x2)
    return f * (delay * u1 + u2), f * (delay * u2 + u1)


def _tail_bound(cav: CavityConfig) -> float:
    # |c_k|^2 / lam^2 <= 4/a^2 * 4/(omega L) <= 16 L^2 / (pi^3 k^3); sum over k > N.
    n = cav.n_modes
    return 8.0 * cav.length**2 / (np.pi**3 * n * n)


def overlap(p: ProtocolParams) -> OverlapResult:
    """Normalized ``<Phi_R|Phi_L>`` over the retained modes.

    When every switching factor vanishes exactly (``T (omega_k + Omega)`` a
    multiple of ``2 pi`` for all modes) the states are zero; the returned
    value is then the limit of the normalized overlap as ``T`` approaches
    that point from above, flagged by ``resonant_limit``.

    Raises
    ------
    DegenerateStateError
        Both detectors sit on nodes of every retained mode.
    """
    resonant = _is_resonant(p)
    if resonant:
        right, left = _limit_amplitudes(p)
        lam = 1.0
    else:
        right = phi_amplitudes(p, Order.RIGHT_FIRST).amplitudes
        left = phi_amplitudes(p, Order.LEFT_FIRST).amplitudes
        lam = p.coupling
    norm_sq_r = float(np.vdot(right, right).real)
    norm_sq_l = float(np.vdot(left, left).real)
    if norm_sq_r == 0.0 or norm_sq_l == 0.0:
        raise DegenerateStateError(
            "both field states vanish; detectors sit on nodes of every retained mode"
        )
    if np.array_equal(right, left):
        s = 1.0 + 0.0j
    else:
        s = complex(np.vdot(right, left)) / math.sqrt(norm_sq_r * norm_sq_l)
    if resonant:
        tail = math.inf
        norm = 0.0
    else:
        scaled = norm_sq_r / lam**2
        tail = _tail_bound(p.cavity) * (1.0 + abs(s)) / scaled
        norm = math.sqrt(scaled)
    return OverlapResult(s, norm, p.cavity.n_modes, tail, resonant)


def overlap_ratio_formula(p: ProtocolParams) -> complex:
    """The overlap evaluated directly as the closed-form ratio of mode sums.

    Independent of :func:`overlap`'s vector route; the two agree to rounding.
    """
    cav = p.cavity
    a = _gap_frequencies(p)
    u1 = cav.mode_values(p.regions.x1)
    u2 = cav.mode_values(p.regions.x2)
    T, dt = p.regions.duration, p.regions.delta_tau
    num = np.sum(np.exp(-1j * dt * a) / a**2 * (1 - np.cos(T * a)) * (u1 + np.exp(1j * dt * a) * u2) ** 2)
    den = 2 * np.sum(np.sin(T * a / 2) ** 2 / a**2 * (u2**2 + 2 * u2 * u1 * np.cos(dt * a) + u1**2))
    if den == 0.0:
        raise DegenerateStateError("normalization sum vanishes")
    return complex(num / den)


def norm_formula(p: ProtocolParams) -> float:
    """Closed-form common norm of the unnormalized states, in units of the coupling."""
    cav = p.cavity
    a = _gap_frequencies(p)
    u1 = cav.mode_values(p.regions.x1)
    u2 = cav.mode_values(p.regions.x2)
    T, dt = p.regions.duration, p.regions.delta_tau
    s = np.sum(np.sin(T * a / 2) ** 2 / a**2 * (u1**2 + 2 * u1 * u2 * np.cos(dt * a) + u2**2))
    return float(2.0 * math.sqrt(s))


# Orthogonalizing point of the protocol: L = 1, x = 1/4, 3/4, Omega = pi, dtau = 3, T = 2 + eps.
def orthogonal_point(epsilon: float, n_modes: int = 30, coupling: float = 1e-3) -> ProtocolParams:
    """Parameters ``L=1, x1=1/4, x2=3/4, Omega=pi, dtau=3, T=2+epsilon``."""
    return ProtocolParams(
        cavity=CavityConfig(1.0, 0.0, n_modes),
        regions=InteractionRegions(0.25, 0.75, 3.0, 2.0 + epsilon),
        energy_gap=math.pi,
        coupling=coupling,
    )


class LimitPoint(NamedTuple):
    epsilon: float
    abs_overlap: float
    n_modes: int
    tail_estimate: float


def overlap_limit_check(epsilons: Sequence[float], start_modes: int = 32,
                        max_modes: int = 1 << 22, growth: int = 4,
                        rel_tail: float = 0.1) -> list[LimitPoint]:
    """``|overlap|`` at the orthogonalizing point for a descending list of ``epsilon``.

    For each value the truncation starts at ``start_modes`` and grows by
    ``growth`` until the tail bound drops below ``rel_tail * |overlap|``.

    Raises
    ------
    ConvergenceError
        The truncation reached ``max_modes`` without meeting the tail criterion;
        ``partial`` holds the points finished so far.
    """
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps):
        raise DomainError("epsilons must be positive")
    if any(b > a for a, b in zip(eps, eps[1:])):
        raise DomainError("epsilons must be sorted in descending order")
    points: list[LimitPoint] = []
    for e in eps:
        n = start_modes
        while True:
            res = overlap(orthogonal_point(e, n))
            if res.tail_estimate < rel_tail * res.magnitude:
                break
            if n >= max_modes:
                raise ConvergenceError(
                    f"truncation cap {max_modes} reached at epsilon={e}",
                    achieved=res.tail_estimate, partial=points,
                )
            n = min(n * growth, max_modes)
        log.debug("epsilon=%g converged with %d modes (tail %.3g)", e, n, res.tail_estimate)
        points.append(LimitPoint(e, res.magnitude, n, res.tail_estimate))
    return points


__all__ = [
    "Order", "ProtocolParams", "OverlapResult", "LimitPoint",
    "window_factor", "detector_amplitudes", "phi_amplitudes", "overlap",
    "overlap_ratio_formula", "norm_formula", "orthogonal_point", "overlap_limit_check",
]
