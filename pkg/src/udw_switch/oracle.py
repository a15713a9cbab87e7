"""Brute-force evolution of two detectors and a truncated Fock space.

The joint space is ``detector 1 (x) detector 2 (x) Fock``, with Fock states
limited to a total photon number ``<= max_excitations`` over the retained
cavity modes. The full monopole coupling (counter-rotating terms included)
is kept. Basis index: ``(2 * level_1 + level_2) * n_fock + fock_index`` with
``g = 0`` and ``e = 1``.

Interaction-picture evolution is integrated with a fourth-order Magnus
scheme. Because ``H0`` is diagonal, every matrix element of the
interaction-picture Hamiltonian is a constant times ``exp(i dE t)``; the
first Magnus term is integrated in closed form, the commutator term uses the
two-point Gauss rule. Step halving controls the error.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .cavity import CavityConfig
from .errors import ConvergenceError, DomainError
from .kinematics import InteractionRegions
from .perturbation import Order, ProtocolParams

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0
_COMMUTATOR_WEIGHT = math.sqrt(3.0) / 12.0


class Picture(str, Enum):
    DIRAC = "dirac"
    SCHROEDINGER = "schroedinger"


@dataclass(frozen=True)
class Detector:
    energy_gap: float
    position: float


@dataclass(frozen=True)
class Window:
    """Coupling of detector ``detector`` (0 or 1) switched on during ``(start, end)``."""

    detector: int
    start: float
    end: float

    def __post_init__(self):
        if self.detector not in (0, 1):
            raise ValueError(f"detector index must be 0 or 1, got {self.detector}")
        if self.end < self.start:
            raise DomainError(f"window ends before it starts: ({self.start}, {self.end})")


@dataclass(frozen=True)
class EvolutionSpec:
    windows: tuple[Window, ...]
    picture: Picture = Picture.DIRAC

    def __post_init__(self):
        windows = tuple(self.windows)
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "picture", Picture(self.picture))
        starts = [w.start for w in windows]
        if starts != sorted(starts):
            raise DomainError("windows must be sorted by start time")
        for d in (0, 1):
            mine = [w for w in windows if w.detector == d]
            for a, b in zip(mine, mine[1:]):
                if b.start < a.end:
                    raise DomainError(f"windows of detector {d} overlap")

    @classmethod
    def for_order(cls, regions: InteractionRegions, order: Order | str,
                  picture: Picture | str = Picture.DIRAC) -> "EvolutionSpec":
        """Windows for one firing order: ``RIGHT_FIRST`` fires detector 1 (at ``x2``) first."""
        first = 1 if Order(order) is Order.RIGHT_FIRST else 0
        t, dt = regions.duration, regions.delta_tau
        early = Window(first, 0.0, t)
        late = Window(1 - first, dt, dt + t)
        return cls(tuple(sorted((early, late), key=lambda w: (w.start, w.detector))), picture)

    @property
    def final_time(self) -> float:
        return max((w.end for w in self.windows), default=0.0)

    def intervals(self):
        """Consecutive ``(t0, t1, active_detectors)`` pieces with constant switching."""
        cuts = sorted({w.start for w in self.windows} | {w.end for w in self.windows})
        for t0, t1 in zip(cuts, cuts[1:]):
            if t1 <= t0:
                continue
            mid = 0.5 * (t0 + t1)
            active = tuple(sorted({w.detector for w in self.windows if w.start < mid < w.end}))
            yield t0, t1, active


def fock_basis(n_modes: int, max_excitations: int) -> list[tuple[int, ...]]:
    """Occupations as sorted tuples of 0-based mode indices, by total photon number."""
    states: list[tuple[int, ...]] = []
    for n in range(max_excitations + 1):
        states.extend(itertools.combinations_with_replacement(range(n_modes), n))
    return states


@dataclass(frozen=True)
class _Coo:
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    gaps: np.ndarray


@dataclass(frozen=True)
class TruncatedSystem:
    """Two detectors coupled to a cavity field on a truncated Fock space."""

    cavity: CavityConfig
    detectors: tuple[Detector, Detector]
    coupling: float
    max_excitations: int = 2

    def __post_init__(self):
        if len(self.detectors) != 2:
            raise ValueError("exactly two detectors are required")
        if self.max_excitations < 1:
            raise DomainError("max_excitations must be at least 1")
        if self.coupling < 0:
            raise DomainError("coupling must be non-negative")
        for det in self.detectors:
            if det.energy_gap <= 0:
                raise DomainError("detector energy gaps must be positive")
            if not 0.0 <= det.position <= self.cavity.length:
                raise DomainError(f"detector position {det.position} outside the cavity")
        object.__setattr__(self, "detectors", tuple(self.detectors))

    @classmethod
    def from_params(cls, p: ProtocolParams, max_excitations: int = 2,
                    n_modes: int | None = None) -> "TruncatedSystem":
        cav = p.cavity if n_modes is None else p.cavity.with_modes(n_modes)
        dets = (Detector(p.energy_gap, p.regions.x1), Detector(p.energy_gap, p.regions.x2))
        return cls(cav, dets, p.coupling, max_excitations)

    def with_(self, **changes) -> "TruncatedSystem":
        return replace(self, **changes)

    @cached_property
    def fock_states(self) -> list[tuple[int, ...]]:
        return fock_basis(self.cavity.n_modes, self.max_excitations)

    @cached_property
    def fock_index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.fock_states)}

    @property
    def n_fock(self) -> int:
        return len(self.fock_states)

    @property
    def dimension(self) -> int:
        return 4 * self.n_fock

    def index(self, level1: int, level2: int, occupation: Sequence[int] = ()) -> int:
        return (2 * level1 + level2) * self.n_fock + self.fock_index[tuple(sorted(occupation))]

    @cached_property
    def energies(self) -> np.ndarray:
        """Diagonal of the free Hamiltonian."""
        w = self.cavity.frequencies()
        fock = np.array([sum(w[k] for k in s) for s in self.fock_states])
        g1, g2 = self.detectors[0].energy_gap, self.detectors[1].energy_gap
        det = np.array([0.0, g2, g1, g1 + g2])
        return (det[:, None] + fock[None, :]).ravel()

    def field_coo(self, x: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``sum_k u_k(x) (a_k^dagger + a_k)`` on the truncated Fock space, COO triplets."""
        u = self.cavity.mode_values(x)
        rows, cols, vals = [], [], []
        for j, state in enumerate(self.fock_states):
            if len(state) >= self.max_excitations:
                continue
            for k in range(self.cavity.n_modes):
                raised = tuple(sorted(state + (k,)))
                i = self.fock_index[raised]
                amp = u[k] * math.sqrt(raised.count(k))
                rows += [i, j]
                cols += [j, i]
                vals += [amp, amp]
        return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)

    @cached_property
    def _coupling_coo(self) -> tuple[_Coo, _Coo]:
        out = []
        nf = self.n_fock
        energies = self.energies
        for d, det in enumerate(self.detectors):
            fr, fc, fv = self.field_coo(det.position)
            rows, cols = [], []
            for l1, l2 in itertools.product((0, 1), repeat=2):
                f1, f2 = (1 - l1, l2) if d == 0 else (l1, 1 - l2)
                rows.append((2 * f1 + f2) * nf + fr)
                cols.append((2 * l1 + l2) * nf + fc)
            r = np.concatenate(rows)
            c = np.concatenate(cols)
            v = self.coupling * np.tile(fv, 4)
            out.append(_Coo(r, c, v.astype(complex), energies[r] - energies[c]))
        return tuple(out)

    def coupling_operator(self, detector: int) -> sp.csr_matrix:
        """Schroedinger-picture ``lambda * sigma_x(detector) (x) phi(x_detector)``."""
        coo = self._coupling_coo[detector]
        return sp.csr_matrix((coo.vals, (coo.rows, coo.cols)), shape=(self.dimension,) * 2)

    def free_hamiltonian(self) -> sp.dia_matrix:
        return sp.diags(self.energies)

    def hamiltonian(self, active: Sequence[int]) -> np.ndarray:
        """Dense Schroedinger-picture Hamiltonian with the given detectors switched on."""
        h = np.diag(self.energies).astype(complex)
        for d in active:
            h = h + self.coupling_operator(d).toarray()
        return h

    def vacuum(self) -> np.ndarray:
        """``|g g>|0>``."""
        psi = np.zeros(self.dimension, dtype=complex)
        psi[self.index(0, 0)] = 1.0
        return psi

    def sector(self, state: np.ndarray, level1: int, level2: int) -> np.ndarray:
        """Fock-space block of ``state`` with the detectors in the given levels."""
        block = 2 * level1 + level2
        return np.asarray(state)[block * self.n_fock:(block + 1) * self.n_fock]

    def one_photon_amplitudes(self, state: np.ndarray, level1: int, level2: int) -> np.ndarray:
        """Amplitudes of ``|level1 level2> a_k^dagger |0>`` for every mode ``k``."""
        block = self.sector(state, level1, level2)
        return np.array([block[self.fock_index[(k,)]] for k in range(self.cavity.n_modes)])

    def detector_sector_amplitudes(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(ge, eg)`` one-photon amplitudes, matching :func:`perturbation.detector_amplitudes`."""
        return self.one_photon_amplitudes(state, 0, 1), self.one_photon_amplitudes(state, 1, 0)


class _InteractionHamiltonian:
    """``H_D(t)`` for a fixed set of active detectors, on a fixed CSR pattern."""

    def __init__(self, system: TruncatedSystem, active: Sequence[int]):
        parts = [system._coupling_coo[d] for d in active]
        rows = np.concatenate([p.rows for p in parts])
        cols = np.concatenate([p.cols for p in parts])
        vals = np.concatenate([p.vals for p in parts])
        gaps = np.concatenate([p.gaps for p in parts])
        order = np.lexsort((cols, rows))
        self.rows, self.cols = rows[order], cols[order]
        self.vals, self.gaps = vals[order], gaps[order]
        self.dim = system.dimension
        self.indptr = np.searchsorted(self.rows, np.arange(self.dim + 1)).astype(np.int64)
        self.max_gap = float(np.max(np.abs(self.gaps))) if self.gaps.size else 0.0

    def _csr(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix((data, self.cols, self.indptr), shape=(self.dim, self.dim))

    def at(self, t: float) -> sp.csr_matrix:
        return self._csr(self.vals * np.exp(1j * self.gaps * t))

    def integral(self, t0: float, h: float) -> sp.csr_matrix:
        """Exact ``int_{t0}^{t0+h} H_D(t) dt``."""
        z = 1j * self.gaps * h
        small = np.abs(z) < 1e-8
        safe = np.where(small, 1.0, z)
        phi1 = np.where(small, 1.0 + 0.5 * z, np.expm1(safe) / safe)
        return self._csr(self.vals * np.exp(1j * self.gaps * t0) * h * phi1)


def _expm_action(apply, v: np.ndarray, max_terms: int = 60) -> np.ndarray:
    """``exp(Omega) v`` by Taylor series; ``Omega`` is small and given by its action."""
    out = v.copy()
    term = v
    scale = max(np.linalg.norm(v), 1e-300)
    for j in range(1, max_terms):
        term = apply(term) / j
        out = out + term
        if np.linalg.norm(term) <= 1e-17 * scale:
            return out
    raise ConvergenceError("Taylor series for a Magnus step did not converge; step too large")


def _magnus_steps(ham: _InteractionHamiltonian, t0: float, t1: float, n: int, v: np.ndarray) -> np.ndarray:
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        omega1 = ham.integral(t, h)
        h1 = ham.at(t + (0.5 - _GAUSS_OFFSET) * h)
        h2 = ham.at(t + (0.5 + _GAUSS_OFFSET) * h)
        c = _COMMUTATOR_WEIGHT * h * h

        def apply(w, omega1=omega1, h1=h1, h2=h2, c=c):
            return -1j * (omega1 @ w) - c * (h2 @ (h1 @ w) - h1 @ (h2 @ w))

        v = _expm_action(apply, v)
    return v


def _propagate(system: TruncatedSystem, spec: EvolutionSpec, v: np.ndarray, step: float) -> np.ndarray:
    for t0, t1, active in spec.intervals():
        if not active or system.coupling == 0.0:
            continue
        ham = _InteractionHamiltonian(system, active)
        n = max(1, math.ceil((t1 - t0) / step))
        v = _magnus_steps(ham, t0, t1, n, v)
    return v


def _initial_step(system: TruncatedSystem, spec: EvolutionSpec) -> float:
    gaps = [_InteractionHamiltonian(system, a).max_gap for _, _, a in spec.intervals() if a]
    top = max(gaps, default=0.0)
    span = max(spec.final_time - min((w.start for w in spec.windows), default=0.0), 1e-300)
    return min(span, 1.0 / top if top > 0 else span, 0.25)


def _evolve(system: TruncatedSystem, spec: EvolutionSpec, v0: np.ndarray,
            tol: float, max_halvings: int) -> np.ndarray:
    if system.coupling == 0.0 or not any(a for _, _, a in spec.intervals()):
        out = v0.copy()
    else:
        step = _initial_step(system, spec)
        prev = _propagate(system, spec, v0, step)
        for _ in range(max_halvings):
            step /= 2.0
            cur = _propagate(system, spec, v0, step)
            change = float(np.linalg.norm(cur - prev, ord=2 if cur.ndim == 2 else None))
            if change < tol:
                out = cur
                break
            prev = cur
        else:
            raise ConvergenceError(
                f"step halving did not reach {tol:g} after {max_halvings} halvings",
                achieved=change,
            )
    if spec.picture is Picture.SCHROEDINGER:
        out = np.exp(-1j * system.energies * spec.final_time).reshape((-1,) + (1,) * (out.ndim - 1)) * out
    return out


def evolve_exact(system: TruncatedSystem, spec: EvolutionSpec, initial: np.ndarray | None = None,
                 tol: float = 1e-10, max_halvings: int = 14) -> np.ndarray:
    """Time-ordered evolution of ``initial`` (default ``|gg>|0>``) through ``spec``.

    The Dirac and Schroedinger pictures coincide at ``t = 0``; with
    ``Picture.SCHROEDINGER`` the result carries the free phase up to the
    last window's end.

    Raises
    ------
    ConvergenceError
        Halving the step ``max_halvings`` times never changed the result by less than ``tol``.
    """
    v0 = system.vacuum() if initial is None else np.asarray(initial, dtype=complex)
    if v0.shape != (system.dimension,):
        raise ValueError(f"initial state must have shape ({system.dimension},)")
    if abs(np.linalg.norm(v0) - 1.0) > 1e-10:
        raise DomainError("initial state must be normalized")
    return _evolve(system, spec, v0, tol, max_halvings)


def evolve_operator(system: TruncatedSystem, spec: EvolutionSpec, tol: float = 1e-11,
                    max_halvings: int = 14) -> np.ndarray:
    """Dense propagator of :func:`evolve_exact` (operator-norm convergence)."""
    return _evolve(system, spec, np.eye(system.dimension, dtype=complex), tol, max_halvings)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _panels(spec: EvolutionSpec, per_unit: float):
    for t0, t1, active in spec.intervals():
        n = max(1, math.ceil((t1 - t0) * per_unit))
        edges = np.linspace(t0, t1, n + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            yield a, b, active


def _gauss(a: float, b: float):
    half = 0.5 * (b - a)
    return a + half * (_GL_NODES + 1.0), half * _GL_WEIGHTS


def _dyson_quadrature(system: TruncatedSystem, spec: EvolutionSpec, order: int,
                      v0: np.ndarray, per_unit: float) -> np.ndarray:
    hams = {}

    def h_at(active, t):
        if active not in hams:
            hams[active] = _InteractionHamiltonian(system, active)
        return hams[active].at(t)

    first = np.zeros_like(v0)
    second = np.zeros_like(v0)
    for a, b, active in _panels(spec, per_unit):
        if not active:
            continue
        nodes, weights = _gauss(a, b)
        if order == 1:
            for t, w in zip(nodes, weights):
                first = first + w * (h_at(active, t) @ v0)
            continue
        for t2, w2 in zip(nodes, weights):
            # first-order vector accumulated up to t2: completed panels plus [a, t2]
            inner_nodes, inner_weights = _gauss(a, t2)
            partial = first.copy()
            for t1, w1 in zip(inner_nodes, inner_weights):
                partial = partial + w1 * (h_at(active, t1) @ v0)
            second = second + w2 * (h_at(active, t2) @ partial)
        for t, w in zip(nodes, weights):
            first = first + w * (h_at(active, t) @ v0)
    return -1j * first if order == 1 else -second


def dyson_term(system: TruncatedSystem, spec: EvolutionSpec, order: int,
               initial: np.ndarray | None = None, rtol: float = 1e-12,
               max_doublings: int = 10) -> np.ndarray:
    """Order-``order`` Dyson contribution, coupling powers included.

    ``order=1``: ``-i int H_D(t) dt psi``; ``order=2``:
    ``-int dt2 int^{t2} dt1 H_D(t2) H_D(t1) psi``. Both by composite
    10-point Gauss-Legendre quadrature, panels doubled until converged.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    v0 = system.vacuum() if initial is None else np.asarray(initial, dtype=complex)
    per_unit = 4.0
    prev = _dyson_quadrature(system, spec, order, v0, per_unit)
    for _ in range(max_doublings):
        per_unit *= 2.0
        cur = _dyson_quadrature(system, spec, order, v0, per_unit)
        change = float(np.linalg.norm(cur - prev))
        if change <= rtol * float(np.linalg.norm(cur)) or change < 1e-300:
            return cur
        prev = cur
    raise ConvergenceError(f"Dyson order-{order} quadrature did not converge", achieved=change)


@dataclass(frozen=True)
class FactorizationReport:
    """Direct vs. factored branch propagators.

    ``deviation`` is the largest operator-norm difference over the two
    orders; ``free_evolutions_equal`` says whether the intermediate free
    evolution is the same in both branches; ``commutator_norm`` is
    ``||[U_first, V]||`` for the right-first branch.
    """

    deviation: float
    branch_deviations: dict
    free_evolutions_equal: bool
    commutator_norm: float


def _factored_branch(system: TruncatedSystem, regions: InteractionRegions, order: Order):
    t, dt = regions.duration, regions.delta_tau
    e = system.energies
    first, second = (1, 0) if order is Order.RIGHT_FIRST else (0, 1)
    if dt == 0.0:
        u = scipy.linalg.expm(-1j * t * system.hamiltonian((0, 1)))
        free = np.eye(system.dimension, dtype=complex)
        return np.exp(1j * e * t)[:, None] * u, free, u
    u_a = scipy.linalg.expm(-1j * t * system.hamiltonian((first,)))
    free = np.diag(np.exp(-1j * e * (dt - t)))
    u_b = scipy.linalg.expm(-1j * t * system.hamiltonian((second,)))
    final = np.exp(1j * e * (dt + t))
    return final[:, None] * (u_b @ free @ u_a), free, u_a


def _check_positions(system: TruncatedSystem, regions: InteractionRegions) -> None:
    if (system.detectors[0].position, system.detectors[1].position) != (regions.x1, regions.x2):
        raise ValueError("detector positions of the system and the regions disagree")


def picture_factorization_check(system: TruncatedSystem, regions: InteractionRegions,
                                tol: float = 1e-11) -> FactorizationReport:
    """Compare each branch's interaction-picture propagator with its switch factorization.

    The factored form is ``exp(i H0 t_f) U_B V U_A``: two Schroedinger-picture
    interaction steps separated by the free evolution ``V`` between windows.
    """
    _check_positions(system, regions)
    devs, frees, comm = {}, [], float("nan")
    for order in (Order.RIGHT_FIRST, Order.LEFT_FIRST):
        direct = evolve_operator(system, EvolutionSpec.for_order(regions, order), tol=tol)
        factored, free, u_a = _factored_branch(system, regions, order)
        devs[order.value] = float(np.linalg.norm(direct - factored, ord=2))
        frees.append(free)
        if order is Order.RIGHT_FIRST:
            comm = float(np.linalg.norm(u_a @ free - free @ u_a, ord=2))
    equal = bool(np.linalg.norm(frees[0] - frees[1], ord=2) <= 1e-14)
    return FactorizationReport(max(devs.values()), devs, equal, comm)


@dataclass(frozen=True)
class SingleOperationReport:
    fidelity: float
    commutator_norm: float


def single_operation_check(system: TruncatedSystem, regions: InteractionRegions,
                           detector: int = 0, tol: float = 1e-12) -> SingleOperationReport:
    """One detector only, switched on either before or after the free interval.

    Returns the fidelity between the two control branches' final states and
    the norm of the commutator between that detector's window unitary and the
    intervening free evolution.
    """
    _check_positions(system, regions)
    t, dt = regions.duration, regions.delta_tau
    early = EvolutionSpec((Window(detector, 0.0, t),))
    late = EvolutionSpec((Window(detector, dt, dt + t),))
    psi0 = evolve_exact(system, early, tol=tol)
    psi1 = evolve_exact(system, late, tol=tol)
    u = scipy.linalg.expm(-1j * t * system.hamiltonian((detector,)))
    free = np.diag(np.exp(-1j * system.energies * (dt - t)))
    comm = float(np.linalg.norm(u @ free - free @ u, ord=2))
    return SingleOperationReport(float(abs(np.vdot(psi0, psi1)) ** 2), comm)


def truncation_stability(system: TruncatedSystem, spec: EvolutionSpec, tol: float = 1e-12) -> float:
    """Change of the one-photon detector sectors when ``max_excitations`` grows by one."""
    bigger = system.with_(max_excitations=system.max_excitations + 1)
    a = system.detector_sector_amplitudes(evolve_exact(system, spec, tol=tol))
    b = bigger.detector_sector_amplitudes(evolve_exact(bigger, spec, tol=tol))
    return float(max(np.max(np.abs(a[0] - b[0])), np.max(np.abs(a[1] - b[1]))))
