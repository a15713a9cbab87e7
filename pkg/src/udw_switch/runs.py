"""Batch drivers behind the CLI: grid sweeps and the two-stage optimizer."""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .config import GRID_KEYS, OptimizeSettings
from .entanglement import chsh_max, concurrence, post_selected_state
from .errors import DegenerateStateError, DomainError
from .kinematics import classify_separation
from .perturbation import ProtocolParams, overlap

SWEEP_COLUMNS = (
    "length", "mass", "x1", "x2", "energy_gap", "delta_tau", "duration",
    "abs_overlap", "phase_overlap", "norm", "concurrence", "chsh_max",
    "separation", "n_modes", "tail_estimate",
)


@dataclass(frozen=True)
class SweepRecord:
    length: float
    mass: float
    x1: float
    x2: float
    energy_gap: float
    delta_tau: float
    duration: float
    abs_overlap: float
    phase_overlap: float
    norm: float
    concurrence: float
    chsh_max: float
    separation: str
    n_modes: int
    tail_estimate: float

    def row(self) -> list[str]:
        out = []
        for name in SWEEP_COLUMNS:
            v = getattr(self, name)
            out.append(format_float(v) if isinstance(v, float) else str(v))
        return out


def format_float(x: float) -> str:
    """17 significant digits; round-trips through ``float``."""
    return "%.17g" % x


def evaluate_point(p: ProtocolParams, sign: str = "+") -> SweepRecord:
    """One sweep row. Degenerate points are recorded with NaN entanglement columns."""
    res = overlap(p)
    try:
        q = post_selected_state(res.overlap, sign)
        conc, chsh = concurrence(q), chsh_max(q)
    except DegenerateStateError:
        conc = chsh = math.nan
    r = p.regions
    return SweepRecord(
        p.cavity.length, p.cavity.mass, r.x1, r.x2, p.energy_gap, r.delta_tau, r.duration,
        res.magnitude, res.phase, res.norm, conc, chsh,
        classify_separation(r).value, res.n_modes_used, res.tail_estimate,
    )


def grid_points(base: ProtocolParams, grid: dict[str, Sequence[float]]) -> list[ProtocolParams]:
    """Admissible parameter sets in lexicographic grid order.

    Axes are nested in the fixed order of ``GRID_KEYS`` (last varies fastest).
    Points whose windows overlap (``0 < delta_tau < T``) or whose detectors
    leave the cavity are skipped.
    """
    axes = [k for k in GRID_KEYS if k in grid]
    if not axes:
        return [base]
    points = []
    for combo in itertools.product(*(grid[k] for k in axes)):
        try:
            points.append(base.replace(**dict(zip(axes, combo))))
        except DomainError:
            continue
    return points


def run_sweep(base: ProtocolParams, grid: dict[str, Sequence[float]], sign: str = "+",
              threads: int = 1) -> list[SweepRecord]:
    """Evaluate every admissible grid point; output order never depends on ``threads``."""
    if any(len(v) == 0 for v in grid.values()):
        return []
    points = grid_points(base, grid)
    if threads <= 1 or len(points) < 2:
        return [evaluate_point(p, sign) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: evaluate_point(p, sign), points))


def write_csv(records: Iterable[SweepRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for rec in records:
        writer.writerow(rec.row())


def sweep_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class TraceEntry:
    stage: str
    params: dict[str, float]
    abs_overlap: float


@dataclass(frozen=True)
class OptimizeResult:
    best: dict[str, float]
    abs_overlap: float
    trace: list[TraceEntry] = field(repr=False)
    n_evaluations: int


def _objective(base: ProtocolParams, names: Sequence[str], values: Sequence[float]) -> float:
    try:
        return overlap(base.replace(**dict(zip(names, map(float, values))))).magnitude
    except (DomainError, DegenerateStateError):
        return math.nan


def optimize_overlap(base: ProtocolParams, settings: OptimizeSettings) -> OptimizeResult:
    """Minimize ``|overlap|`` over the free parameters.

    Stage one scans a regular grid with ``grid_points`` values per axis
    (a single point sits at the box centre). Stage two polishes the best grid
    point with bounded Nelder-Mead. Both stages are deterministic.

    Raises
    ------
    DegenerateStateError
        Every grid point is inadmissible or degenerate.
    """
    names = list(settings.free)
    lo = np.array([settings.free[n][0] for n in names])
    hi = np.array([settings.free[n][1] for n in names])
    if settings.grid_points == 1:
        axes = [[0.5 * (a + b)] for a, b in zip(lo, hi)]
    else:
        axes = [np.linspace(a, b, settings.grid_points) for a, b in zip(lo, hi)]
    trace: list[TraceEntry] = []
    best_x, best_f = None, math.inf
    for combo in itertools.product(*axes):
        f = _objective(base, names, combo)
        trace.append(TraceEntry("grid", dict(zip(names, map(float, combo))), f))
        if f < best_f:
            best_x, best_f = np.array(combo, dtype=float), f
    if best_x is None:
        raise DegenerateStateError("every optimizer grid point is degenerate or inadmissible")

    if settings.refine and settings.max_iter > 0 and np.any(hi > lo):
        def fun(x):
            f = _objective(base, names, x)
            trace.append(TraceEntry("simplex", dict(zip(names, map(float, x))), f))
            return 2.0 if math.isnan(f) else f

        res = minimize(fun, best_x, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"maxiter": settings.max_iter, "xatol": 1e-10, "fatol": 1e-12})
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    return OptimizeResult(dict(zip(names, map(float, best_x))), float(best_f), trace, len(trace))
