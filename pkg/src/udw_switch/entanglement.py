"""Post-selected two-cavity state, its concurrence and its optimal CHSH value.

Each wing's field state lies in ``span{Phi_R, Phi_L}``. Writing
``Phi_L = s Phi_R + sqrt(1 - |s|^2) Phi_perp`` with ``s = <Phi_R|Phi_L>``
turns ``Phi_R Phi_R +- Phi_L Phi_L`` into a two-qubit pure state over the
ordered basis ``{R, perp} x {R, perp}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateStateError, DomainError
from .perturbation import ProtocolParams, overlap

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

VIOLATION_TOL = 1e-9


class Branch(str, Enum):
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class EffectiveTwoQubit:
    """Normalized amplitudes ``(a, b, c, d)`` over ``|RR>, |R perp>, |perp R>, |perp perp>``."""

    amplitudes: np.ndarray = field(repr=False)
    sign: Branch = Branch.PLUS

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size != 4:
            raise ValueError("a two-qubit state needs exactly 4 amplitudes")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise DomainError("two-qubit amplitudes are not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "sign", Branch(self.sign))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def reduced_state(self) -> np.ndarray:
        """Reduced density matrix of the first cavity."""
        m = self.amplitudes.reshape(2, 2)
        return m @ m.conj().T


@dataclass(frozen=True)
class BellReport:
    concurrence: float
    chsh_max: float
    violates: bool
    overlap: complex
    sign: Branch
    branch_probability: float


def post_selected_state(s: complex, sign: Branch | str = Branch.PLUS) -> EffectiveTwoQubit:
    """Two-qubit form of ``Phi_R Phi_R +- Phi_L Phi_L`` for overlap ``s``.

    Raises
    ------
    DomainError
        ``|s| > 1``.
    DegenerateStateError
        The minus branch with ``|s| = 1`` has zero norm.
    """
    sign = Branch(sign)
    s = complex(s)
    mag2 = abs(s) ** 2
    if mag2 > 1.0 + 1e-12:
        raise DomainError(f"|overlap| = {abs(s)} exceeds 1")
    t = math.sqrt(max(0.0, 1.0 - mag2))
    pm = 1.0 if sign is Branch.PLUS else -1.0
    # |RR> +- (s|R> + t|perp>)(s|R> + t|perp>)
    amps = np.array([1.0 + pm * s * s, pm * s * t, pm * s * t, pm * t * t], dtype=complex)
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12:
        raise DegenerateStateError("post-selection outcome has zero probability (minus branch, |s| = 1)")
    return EffectiveTwoQubit(amps / nrm, sign)


def concurrence(q: EffectiveTwoQubit) -> float:
    """Pure-state concurrence ``2 |ad - bc|``."""
    a, b, c, d = q.amplitudes
    return float(min(1.0, 2.0 * abs(a * d - b * c)))


def correlation_matrix(q: EffectiveTwoQubit) -> np.ndarray:
    """``T_ij = <sigma_i (x) sigma_j>`` for ``i, j`` in ``x, y, z``."""
    rho = q.density_matrix()
    return np.array([[np.trace(rho @ np.kron(si, sj)).real for sj in PAULI] for si in PAULI])


def chsh_max(q: EffectiveTwoQubit) -> float:
    """Optimal CHSH value ``2 sqrt(m1 + m2)`` from the two largest eigenvalues of ``T^T T``."""
    t = correlation_matrix(q)
    eig = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2.0 * math.sqrt(max(0.0, eig[0] + eig[1])))


def _direction(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def chsh_value(q: EffectiveTwoQubit, a, a2, b, b2) -> float:
    """CHSH expression for spin measurements along unit vectors ``a, a2`` (first) and ``b, b2``."""
    psi = q.amplitudes

    def obs(n):
        return sum(ni * p for ni, p in zip(n, PAULI))

    def corr(x, y):
        return float(np.vdot(psi, np.kron(obs(x), obs(y)) @ psi).real)

    return corr(a, b) + corr(a, b2) + corr(a2, b) - corr(a2, b2)


def chsh_search(q: EffectiveTwoQubit, n_starts: int = 400, n_refine: int = 6, seed: int = 0) -> float:
    """Numerical maximum of the CHSH expression over measurement directions.

    Seeded random scan of the eight direction angles followed by Nelder-Mead
    polishing of the best candidates. Used to cross-check :func:`chsh_max`.
    """
    rng = np.random.default_rng(seed)

    def neg(angles):
        dirs = [_direction(angles[2 * i], angles[2 * i + 1]) for i in range(4)]
        return -chsh_value(q, *dirs)

    starts = rng.uniform(0.0, 2.0 * math.pi, size=(n_starts, 8))
    scores = np.array([neg(x) for x in starts])
    best = -np.inf
    for idx in np.argsort(scores)[:n_refine]:
        res = minimize(neg, starts[idx], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 20000, "maxfev": 20000})
        best = max(best, -res.fun)
    return float(best)


def branch_probability(s: complex, sign: Branch | str) -> float:
    """Relative weight ``(1 +- Re s^2) / 2`` of a spin outcome for normalized wing states."""
    pm = 1.0 if Branch(sign) is Branch.PLUS else -1.0
    return float(0.5 * (1.0 + pm * (complex(s) ** 2).real))


def protocol_bell_report(p: ProtocolParams, sign: Branch | str = Branch.PLUS) -> BellReport:
    """Overlap, post-selected state, concurrence and CHSH optimum for one parameter set."""
    sign = Branch(sign)
    s = overlap(p).overlap
    if sign is Branch.MINUS and abs(s) >= 1.0 - 1e-9:
        raise DegenerateStateError("minus branch needs |overlap| < 1 - 1e-9")
    q = post_selected_state(s, sign)
    conc = concurrence(q)
    chsh = chsh_max(q)
    return BellReport(conc, chsh, bool(chsh > 2.0 + VIOLATION_TOL), s, sign, branch_probability(s, sign))
