"""Run configuration files for the command-line front end.

A config is one YAML (or JSON) mapping. Numeric fields accept plain numbers
or short arithmetic strings in ``pi``, e.g. ``"30*pi"``.
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .cavity import CavityConfig
from .errors import DomainError
from .kinematics import InteractionRegions, TrajectoryParams, delta_tau
from .perturbation import ProtocolParams


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


# Canonical order of sweepable parameters; also the CSV grid order.
GRID_KEYS = ("length", "x1", "x2", "energy_gap", "delta_tau", "duration")
ALIASES = {"L": "length", "omega": "energy_gap", "Omega": "energy_gap", "T": "duration",
           "dtau": "delta_tau"}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval_node(node.operand))
    raise ConfigError(f"unsupported expression element: {ast.dump(node)}")


def number(value: Any, name: str = "value") -> float:
    """Coerce a config scalar (number or ``pi`` expression) to float."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval_node(ast.parse(value.strip(), mode="eval")))
        except (SyntaxError, ZeroDivisionError) as exc:
            raise ConfigError(f"{name}: cannot evaluate {value!r}") from exc
    raise ConfigError(f"{name}: expected a number, got {type(value).__name__}")


def grid_values(spec: Any, name: str) -> list[float]:
    """A grid axis: explicit list, or ``{start, stop, num}`` (inclusive linspace)."""
    if isinstance(spec, list):
        return [number(v, name) for v in spec]
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num"}
        if unknown:
            raise ConfigError(f"grid {name}: unknown keys {sorted(unknown)}")
        try:
            start, stop, num = number(spec["start"]), number(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"grid {name}: missing {exc.args[0]!r}") from exc
        if num < 0:
            raise ConfigError(f"grid {name}: num must be non-negative")
        return [float(v) for v in np.linspace(start, stop, num)]
    return [number(spec, name)]


def _canonical(key: str) -> str:
    key = ALIASES.get(key, key)
    if key not in GRID_KEYS:
        raise ConfigError(f"unknown parameter {key!r}; expected one of {GRID_KEYS}")
    return key


def _section(raw: dict, key: str, allowed: set[str]) -> dict:
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"section {key!r}: unknown keys {sorted(unknown)}")
    return sec


@dataclass(frozen=True)
class OptimizeSettings:
    free: dict[str, tuple[float, float]]
    grid_points: int = 21
    max_iter: int = 400
    refine: bool = True


@dataclass(frozen=True)
class OracleSettings:
    n_modes: int = 10
    max_excitations: int = 2
    coupling: float = 1e-3
    draws: int = 5
    seed: int = 1
    tolerance: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs; built by :func:`load_config`."""

    params: ProtocolParams
    sign: str = "+"
    trajectory: TrajectoryParams | None = None
    grid: dict[str, list[float]] = field(default_factory=dict)
    optimize: OptimizeSettings | None = None
    omega_sweep: list[float] | None = None
    oracle: OracleSettings = OracleSettings()
    threads: int | None = None


def parse_config(raw: Any, n_modes: int | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    unknown = set(raw) - {"cavity", "protocol", "trajectory", "sweep", "optimize", "bell", "oracle"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    try:
        return _parse(raw, n_modes)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _parse(raw: dict, n_modes: int | None) -> RunConfig:
    cav = _section(raw, "cavity", {"length", "mass", "n_modes"})
    cavity = CavityConfig(
        number(cav.get("length", 1.0), "length"),
        number(cav.get("mass", 0.0), "mass"),
        int(n_modes if n_modes is not None else cav.get("n_modes", 30)),
    )

    proto = _section(raw, "protocol", {"x1", "x2", "energy_gap", "omega", "coupling",
                                       "delta_tau", "duration", "T", "sign"})
    traj_sec = _section(raw, "trajectory", {"accel_up", "accel_down", "coordinate_duration"})
    trajectory = None
    if traj_sec:
        trajectory = TrajectoryParams(*(number(traj_sec.get(k), k) for k in
                                        ("accel_up", "accel_down", "coordinate_duration")))
    derived = delta_tau(trajectory) if trajectory is not None else None
    if "delta_tau" in proto:
        dtau = number(proto["delta_tau"], "delta_tau")
    elif derived is not None:
        dtau = derived
    else:
        raise ConfigError("protocol.delta_tau missing and no trajectory section to derive it")
    duration = proto.get("duration", proto.get("T"))
    gap = proto.get("energy_gap", proto.get("omega"))
    if duration is None or gap is None:
        raise ConfigError("protocol needs 'duration' (T) and 'energy_gap' (omega)")
    regions = InteractionRegions(
        number(proto.get("x1", 0.25 * cavity.length), "x1"),
        number(proto.get("x2", 0.75 * cavity.length), "x2"),
        dtau,
        number(duration, "duration"),
    )
    params = ProtocolParams(cavity, regions, number(gap, "energy_gap"),
                            number(proto.get("coupling", 1e-3), "coupling"))
    sign = str(proto.get("sign", "+"))
    if sign not in ("+", "-"):
        raise ConfigError(f"sign must be '+' or '-', got {sign!r}")

    sweep = _section(raw, "sweep", {"grid", "threads"})
    grid_raw = sweep.get("grid") or {}
    if not isinstance(grid_raw, dict):
        raise ConfigError("sweep.grid must be a mapping")
    grid = {}
    for key, spec in grid_raw.items():
        name = _canonical(key)
        if name in grid:
            raise ConfigError(f"grid axis {name!r} given twice")
        grid[name] = grid_values(spec, name)

    opt = None
    opt_sec = _section(raw, "optimize", {"free", "grid_points", "max_iter", "refine"})
    if opt_sec:
        free = {}
        for key, bounds in (opt_sec.get("free") or {}).items():
            if not isinstance(bounds, list) or len(bounds) != 2:
                raise ConfigError(f"optimize.free.{key}: bounds must be [low, high]")
            lo, hi = number(bounds[0], key), number(bounds[1], key)
            if lo > hi:
                raise ConfigError(f"optimize.free.{key}: bounds out of order")
            free[_canonical(key)] = (lo, hi)
        if not free:
            raise ConfigError("optimize.free must name at least one parameter")
        opt = OptimizeSettings(free, int(opt_sec.get("grid_points", 21)),
                               int(opt_sec.get("max_iter", 400)), bool(opt_sec.get("refine", True)))
        if opt.grid_points < 1:
            raise ConfigError("optimize.grid_points must be at least 1")

    bell = _section(raw, "bell", {"omega_sweep"})
    omega_sweep = grid_values(bell["omega_sweep"], "omega_sweep") if "omega_sweep" in bell else None

    orc = _section(raw, "oracle", {"n_modes", "max_excitations", "coupling", "draws", "seed", "tolerance"})
    oracle = OracleSettings(
        int(orc.get("n_modes", 10)), int(orc.get("max_excitations", 2)),
        number(orc.get("coupling", 1e-3), "oracle.coupling"), int(orc.get("draws", 5)),
        int(orc.get("seed", 1)), number(orc.get("tolerance", 1e-10), "oracle.tolerance"),
    )
    if oracle.coupling < 0 or oracle.draws < 1 or oracle.n_modes < 1 or oracle.max_excitations < 1:
        raise ConfigError("oracle settings out of range")

    threads = sweep.get("threads")
    return RunConfig(params, sign, trajectory, grid, opt, omega_sweep, oracle,
                     None if threads is None else int(threads))


def load_config(path: str | Path, n_modes: int | None = None) -> RunConfig:
    """Read and validate a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(raw, n_modes)
