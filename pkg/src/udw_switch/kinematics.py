"""Proper times along four-segment hyperbolic worldlines and causal classification.

Each spin-dependent trajectory is four identical hyperbolic segments of proper
acceleration ``A``, traversed in coordinate time ``T_A`` of the common
inertial frame. The detectors are static inside the cavity during their
interaction windows, so a window is the worldline segment
``{x} x [t0, t0 + T]`` in cavity-frame coordinates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError


@dataclass(frozen=True)
class TrajectoryParams:
    """Accelerations for the two spin states and the total coordinate travel time.

    ``accel_up`` is the larger acceleration; the ordering is enforced where
    it matters (:func:`delta_tau`), not on construction.
    """

    accel_up: float
    accel_down: float
    coordinate_duration: float

    def __post_init__(self):
        for name in ("accel_up", "accel_down", "coordinate_duration"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive, got {value}")


class SeparationClass(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    MIXED = "mixed"


@dataclass(frozen=True)
class InteractionRegions:
    """Positions of the two detectors and the timing of their interaction windows.

    The earlier window is ``(0, T)``, the later one ``(delta_tau, delta_tau + T)``,
    both in cavity-frame coordinate time.
    """

    x1: float
    x2: float
    delta_tau: float
    duration: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x1, self.x2, self.delta_tau, self.duration)):
            raise DomainError("interaction-region parameters must be finite")
        if self.duration <= 0:
            raise DomainError(f"window duration must be positive, got {self.duration}")
        if self.delta_tau < 0:
            raise DomainError(f"delta_tau must be non-negative, got {self.delta_tau}")
        if self.delta_tau > 0 and self.duration > self.delta_tau:
            raise DomainError(
                f"windows overlap: duration {self.duration} exceeds delta_tau {self.delta_tau}"
            )
        if self.x1 == self.x2:
            warnings.warn("detectors share a position; the two orders are indistinguishable",
                          stacklevel=3)

    @property
    def separation(self) -> float:
        return abs(self.x2 - self.x1)


def proper_time_hyperbolic(accel: float, coordinate_duration: float) -> float:
    """Proper time ``(4/A) asinh(A T_A / 4)`` along four hyperbolic segments.

    Parameters
    ----------
    accel : float
        Proper acceleration ``A`` of every segment.
    coordinate_duration : float
        Total coordinate time ``T_A`` spent on the worldline.
    """
    if not (accel > 0 and coordinate_duration > 0):
        raise DomainError("acceleration and coordinate duration must be positive")
    return 4.0 / accel * math.asinh(accel * coordinate_duration / 4.0)


def delta_tau(p: TrajectoryParams) -> float:
    """Proper-time lag ``tau_down - tau_up`` between the two trajectories."""
    if p.accel_up <= p.accel_down:
        raise DomainError(
            f"accel_up ({p.accel_up}) must exceed accel_down ({p.accel_down})"
        )
    return (proper_time_hyperbolic(p.accel_down, p.coordinate_duration)
            - proper_time_hyperbolic(p.accel_up, p.coordinate_duration))


def delta_tau_asymptotic(p: TrajectoryParams) -> float:
    """Leading large-``T_A`` behaviour of :func:`delta_tau`.

    The remainder is ``O(T_A**-2)``. Equal accelerations give exactly zero.
    """
    a_up, a_down = p.accel_up, p.accel_down
    if a_up < a_down:
        raise DomainError(
            f"accel_up ({a_up}) must not be smaller than accel_down ({a_down})"
        )
    if a_up == a_down:
        return 0.0
    const = 2.0 * (math.log(a_down**2 / 4.0) / a_down - math.log(a_up**2 / 4.0) / a_up)
    slope = 4.0 * (1.0 / a_down - 1.0 / a_up)
    return const + slope * math.log(p.coordinate_duration)


def classify_separation(r: InteractionRegions) -> SeparationClass:
    """Causal relation between the earlier and the later interaction window.

    With ``dx = |x2 - x1|`` and ``c = 1``: spacelike iff ``delta_tau + T < dx``,
    timelike iff ``delta_tau - T > dx``; lightlike ties and everything in
    between are :attr:`SeparationClass.MIXED`.
    """
    dx = r.separation
    if r.delta_tau + r.duration < dx:
        return SeparationClass.SPACELIKE
    if r.delta_tau - r.duration > dx:
        return SeparationClass.TIMELIKE
    return SeparationClass.MIXED
