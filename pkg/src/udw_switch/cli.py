"""``udw-switch`` command-line front end.

Exit codes: 0 success, 1 an oracle check failed, 2 bad configuration,
3 numerical failure (non-convergence or a degenerate state), 4 I/O error.
"""
from __future__ import annotations

import functools
import json
import logging
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import click

from .config import ConfigError, RunConfig, load_config
from .entanglement import protocol_bell_report
from .errors import ConvergenceError, DegenerateStateError, DomainError
from .kinematics import classify_separation
from .perturbation import overlap
from .runs import format_float, optimize_overlap, run_sweep, sweep_csv
from .validation import Status, run_oracle_checks

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

THREADS_ENV = "UDW_SWITCH_THREADS"


class _Exit(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _load(ctx: click.Context) -> RunConfig:
    try:
        return load_config(ctx.obj["config"], ctx.obj["modes"])
    except ConfigError as exc:
        raise _Exit(f"config error: {exc}", EXIT_CONFIG) from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise _Exit(f"cannot write {out}: {exc}", EXIT_IO) from exc


def _kv(pairs) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, float):
            value = format_float(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _numeric_guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConvergenceError as exc:
            raise _Exit(f"numerical failure: {exc} (achieved {exc.achieved:.3g})", EXIT_NUMERIC) from exc
        except (DegenerateStateError, DomainError) as exc:
            raise _Exit(f"numerical failure: {exc}", EXIT_NUMERIC) from exc
    return wrapper


def _common(fn):
    fn = click.option("--threads", type=click.IntRange(min=1), envvar=THREADS_ENV, default=1,
                      show_default=True, help=f"Worker threads (default from ${THREADS_ENV}).")(fn)
    fn = click.option("--modes", type=click.IntRange(min=1), default=None,
                      help="Override the number of cavity modes.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Write output here instead of stdout.")(fn)
    fn = click.option("--config", "config", required=True, type=click.Path(dir_okay=False),
                      help="YAML or JSON run configuration.")(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging to stderr.")
def main(verbose: bool) -> None:
    """Overlaps, entanglement and oracle checks for the two-detector cavity switch."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _ctx(config, out, modes, threads) -> click.Context:
    ctx = click.get_current_context()
    ctx.obj = {"config": config, "out": out, "modes": modes, "threads": threads}
    return ctx


@main.command("overlap")
@_common
@_numeric_guard
def overlap_cmd(config, out, modes, threads):
    """Print the normalized overlap and truncation diagnostics."""
    ctx = _ctx(config, out, modes, threads)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = _load(ctx)
        res = overlap(cfg.params)
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    _emit(_kv([
        ("overlap_real", res.overlap.real), ("overlap_imag", res.overlap.imag),
        ("abs_overlap", res.magnitude), ("phase_overlap", res.phase), ("norm", res.norm),
        ("n_modes", res.n_modes_used), ("tail_estimate", res.tail_estimate),
        ("resonant_limit", str(res.resonant_limit).lower()),
        ("separation", classify_separation(cfg.params.regions).value),
    ]), out)


@main.command("sweep")
@_common
@_numeric_guard
def sweep_cmd(config, out, modes, threads):
    """Evaluate the configured parameter grid and write CSV."""
    ctx = _ctx(config, out, modes, threads)
    cfg = _load(ctx)
    n = threads if ctx.get_parameter_source("threads").name != "DEFAULT" else (cfg.threads or threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        records = run_sweep(cfg.params, cfg.grid, cfg.sign, n)
    _emit(sweep_csv(records), out)


@main.command("optimize")
@_common
@_numeric_guard
def optimize_cmd(config, out, modes, threads):
    """Minimize |overlap| over the configured free parameters."""
    ctx = _ctx(config, out, modes, threads)
    cfg = _load(ctx)
    if cfg.optimize is None:
        raise _Exit("config error: no 'optimize' section", EXIT_CONFIG)
    res = optimize_overlap(cfg.params, cfg.optimize)
    pairs = [(f"best_{k}", v) for k, v in res.best.items()]
    pairs += [("abs_overlap", res.abs_overlap), ("evaluations", res.n_evaluations)]
    text = _kv(pairs)
    if out is not None:
        trace = [{"stage": t.stage, "params": t.params,
                  "abs_overlap": None if math.isnan(t.abs_overlap) else t.abs_overlap}
                 for t in res.trace]
        _emit(json.dumps({"best": res.best, "abs_overlap": res.abs_overlap, "trace": trace},
                         indent=1) + "\n", out)
    click.echo(text, nl=False)


@main.command("classify")
@_common
def classify_cmd(config, out, modes, threads):
    """Print the causal relation between the two interaction windows."""
    cfg = _load(_ctx(config, out, modes, threads))
    _emit(classify_separation(cfg.params.regions).value + "\n", out)


@main.command("bell")
@_common
@_numeric_guard
def bell_cmd(config, out, modes, threads):
    """Concurrence and optimal CHSH value of the post-selected state.

    With ``bell.omega_sweep`` set, the gap minimizing |overlap| is used.
    """
    cfg = _load(_ctx(config, out, modes, threads))
    p = cfg.params
    if cfg.omega_sweep:
        candidates = []
        for gap in cfg.omega_sweep:
            try:
                q = p.replace(energy_gap=gap)
                candidates.append((overlap(q).magnitude, gap, q))
            except (DomainError, DegenerateStateError):
                continue
        if not candidates:
            raise _Exit("numerical failure: every gap in the sweep is degenerate", EXIT_NUMERIC)
        p = min(candidates, key=lambda c: (c[0], c[1]))[2]
    rep = protocol_bell_report(p, cfg.sign)
    _emit(_kv([
        ("energy_gap", p.energy_gap), ("sign", rep.sign.value),
        ("abs_overlap", abs(rep.overlap)), ("concurrence", rep.concurrence),
        ("chsh_max", rep.chsh_max), ("violates", str(rep.violates).lower()),
        ("branch_probability", rep.branch_probability),
        ("separation", classify_separation(p.regions).value),
    ]), out)


@main.command("oracle-check")
@_common
@_numeric_guard
def oracle_check_cmd(config, out, modes, threads):
    """Compare the truncated-Fock oracle against the first-order results."""
    cfg = _load(_ctx(config, out, modes, threads))
    settings = cfg.oracle
    if modes is not None:
        settings = replace(settings, n_modes=modes)
    results = run_oracle_checks(settings)
    lines = []
    for r in results:
        note = f"  ({r.detail})" if r.detail else ""
        lines.append(f"{r.status.value.upper():4s}  {r.name}: {r.value:.6g} {r.threshold}{note}")
    _emit("\n".join(lines) + "\n", out)
    if any(r.status is Status.FAIL for r in results):
        sys.exit(EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
