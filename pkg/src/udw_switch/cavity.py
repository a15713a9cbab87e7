"""Klein-Gordon mode basis of a 1D Dirichlet cavity and single-excitation states.

Natural units throughout (c = hbar = 1). Modes are 1-indexed:
``k_n = n pi / L``, ``omega_n = sqrt(k_n**2 + m**2)`` and the spatial mode
function is ``u_n(x) = sin(k_n x) / sqrt(omega_n L)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStateError, DomainError


@dataclass(frozen=True)
class CavityConfig:
    """Cavity of length ``length`` holding a scalar field of mass ``mass``.

    ``n_modes`` is the explicit truncation of the mode sum; every quantity
    computed from a config uses exactly modes ``1..n_modes``.
    """

    length: float = 1.0
    mass: float = 0.0
    n_modes: int = 30

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise DomainError(f"cavity length must be positive, got {self.length}")
        if not np.isfinite(self.mass) or self.mass < 0:
            raise DomainError(f"field mass must be non-negative, got {self.mass}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise DomainError(f"n_modes must be a positive integer, got {self.n_modes}")
        object.__setattr__(self, "n_modes", int(self.n_modes))

    def with_modes(self, n_modes: int) -> "CavityConfig":
        return CavityConfig(self.length, self.mass, n_modes)

    def mode_numbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1, dtype=float)

    def wavenumbers(self) -> np.ndarray:
        return self.mode_numbers() * np.pi / self.length

    def frequencies(self) -> np.ndarray:
        k = self.wavenumbers()
        return np.sqrt(k * k + self.mass**2)

    def mode_values(self, x: float) -> np.ndarray:
        """Spatial mode functions ``u_n(x)`` for all retained modes."""
        _check_position(self, x)
        return _sinpi(self.mode_numbers() * (x / self.length)) / np.sqrt(self.frequencies() * self.length)


def _sinpi(r):
    # sin(pi r) with exact zeros at integer r, so Dirichlet nodes are exact
    r = np.asarray(r, dtype=float)
    n = np.round(r)
    return np.where(n % 2 == 0, 1.0, -1.0) * np.sin(np.pi * (r - n))


def _check_position(cfg: CavityConfig, x: float) -> None:
    if not (0.0 <= x <= cfg.length):
        raise DomainError(f"position {x} lies outside the cavity [0, {cfg.length}]")


def _check_mode(cfg: CavityConfig, n: int) -> None:
    if int(n) != n or n < 1 or n > cfg.n_modes:
        raise DomainError(f"mode index must be in 1..{cfg.n_modes}, got {n}")


def mode_frequency(cfg: CavityConfig, n: int) -> float:
    """Frequency ``sqrt((n pi / L)^2 + m^2)`` of mode ``n``."""
    _check_mode(cfg, n)
    k = n * np.pi / cfg.length
    return float(np.sqrt(k * k + cfg.mass**2))


def mode_function(cfg: CavityConfig, n: int, x: float) -> float:
    """Spatial part ``sin(n pi x / L) / sqrt(omega_n L)`` of mode ``n``."""
    _check_mode(cfg, n)
    _check_position(cfg, x)
    return float(_sinpi(n * (x / cfg.length)) / np.sqrt(mode_frequency(cfg, n) * cfg.length))


@dataclass(frozen=True)
class SingleExcitationState:
    """Field state ``sum_k c_k a_k^dagger |0>`` stored as its amplitude vector.

    Amplitudes are kept unnormalized unless :meth:`normalize` is called.
    """

    amplitudes: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise DomainError("state flagged as normalized but its norm is not 1")

    def __len__(self):
        return self.amplitudes.size

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "SingleExcitationState":
        nrm = self.norm()
        if nrm == 0.0:
            raise DegenerateStateError("cannot normalize the zero state")
        return SingleExcitationState(self.amplitudes / nrm, normalized=True)

    def __add__(self, other: "SingleExcitationState") -> "SingleExcitationState":
        _check_lengths(self, other)
        return SingleExcitationState(self.amplitudes + other.amplitudes)


def _check_lengths(a: SingleExcitationState, b: SingleExcitationState) -> None:
    if len(a) != len(b):
        raise ValueError(f"mode-count mismatch: {len(a)} vs {len(b)}")


def inner_product(a: SingleExcitationState, b: SingleExcitationState) -> complex:
    """``<a|b> = sum_k conj(a_k) b_k``."""
    _check_lengths(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))
