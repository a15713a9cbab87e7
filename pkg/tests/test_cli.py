import csv
import io
import math

import pytest
import yaml
from click.testing import CliRunner

from udw_switch.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, main


def write(tmp_path, raw, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def proto(**kw):
    base = {"x1": 0.25, "x2": 0.75, "energy_gap": "pi", "delta_tau": 3.0, "duration": 2.0}
    base.update(kw)
    return base


def run(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env)


def parse_kv(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def test_overlap_near_orthogonal(tmp_path):
    cfg = write(tmp_path, {"cavity": {"n_modes": 512}, "protocol": proto(duration=2.01)})
    res = run("overlap", "--config", cfg)
    assert res.exit_code == 0, res.output
    out = parse_kv(res.output)
    assert float(out["abs_overlap"]) < 0.1
    assert out["separation"] == "timelike"
    assert out["n_modes"] == "512"
    assert float(out["tail_estimate"]) < 0.1 * float(out["abs_overlap"])


def test_overlap_simultaneous(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(delta_tau=0.0, duration=0.5)})
    out = parse_kv(run("overlap", "--config", cfg).output)
    assert float(out["abs_overlap"]) == 1.0


def test_overlap_coincident_detectors_warns(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(x1=0.4, x2=0.4, delta_tau=2.5, duration=1.3, energy_gap=2.1)})
    res = run("overlap", "--config", cfg)
    assert res.exit_code == 0
    assert "warning" in res.stderr
    assert float(parse_kv(res.stdout)["abs_overlap"]) == 1.0


def test_modes_flag(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(duration=1.3, energy_gap=2.1, delta_tau=2.5)})
    assert parse_kv(run("overlap", "--config", cfg, "--modes", "17").output)["n_modes"] == "17"


@pytest.mark.parametrize("dtau,dur,expected", [(0.1, 0.1, "spacelike"), (3.0, 2.0, "timelike"), (1.0, 0.5, "mixed")])
def test_classify(tmp_path, dtau, dur, expected):
    cfg = write(tmp_path, {"protocol": proto(delta_tau=dtau, duration=dur)})
    res = run("classify", "--config", cfg)
    assert res.exit_code == 0 and res.output.strip() == expected


def test_bell_orthogonal_point(tmp_path):
    cfg = write(tmp_path, {"cavity": {"n_modes": 2048}, "protocol": proto(duration=2.001)})
    out = parse_kv(run("bell", "--config", cfg).output)
    assert out["violates"] == "true"


def test_bell_simultaneous(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(delta_tau=0.0, duration=0.5)})
    out = parse_kv(run("bell", "--config", cfg).output)
    assert out["violates"] == "false"
    assert float(out["concurrence"]) == 0.0


def test_bell_minus_branch_degenerate_exit(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(delta_tau=0.0, duration=0.5, sign="-")})
    assert run("bell", "--config", cfg).exit_code == EXIT_NUMERIC


def test_bell_spacelike_with_gap_sweep(tmp_path):
    raw = {"protocol": proto(delta_tau=0.1, duration=0.1),
           "bell": {"omega_sweep": {"start": 0.05, "stop": "30*pi - 0.05", "num": 400}}}
    out = parse_kv(run("bell", "--config", write(tmp_path, raw)).output)
    assert out["violates"] == "true"
    assert out["separation"] == "spacelike"


def sweep_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_gap_grid(tmp_path):
    raw = {"protocol": proto(delta_tau=0.1, duration=0.1),
           "sweep": {"grid": {"omega": {"start": 0.05, "stop": "30*pi - 0.05", "num": 400}}}}
    out = tmp_path / "sweep.csv"
    res = run("sweep", "--config", write(tmp_path, raw), "--out", str(out))
    assert res.exit_code == 0
    rows = sweep_rows(out.read_text())
    assert len(rows) == 400
    assert min(float(r["abs_overlap"]) for r in rows) < 0.99


def test_sweep_timing_grid_admissible_only(tmp_path):
    raw = {"protocol": proto(),
           "sweep": {"grid": {"delta_tau": [0.5, 1.0, 2.0], "T": [0.5, 1.0, 1.5]}}}
    rows = sweep_rows(run("sweep", "--config", write(tmp_path, raw)).output)
    pairs = [(float(r["delta_tau"]), float(r["duration"])) for r in rows]
    assert pairs == [(0.5, 0.5), (1.0, 0.5), (1.0, 1.0), (2.0, 0.5), (2.0, 1.0), (2.0, 1.5)]


def test_sweep_empty_grid(tmp_path):
    raw = {"protocol": proto(), "sweep": {"grid": {"omega": []}}}
    res = run("sweep", "--config", write(tmp_path, raw))
    assert res.exit_code == 0
    assert res.output.count("\n") == 1 and res.output.startswith("length,mass,x1")


def test_sweep_deterministic_across_threads(tmp_path):
    raw = {"protocol": proto(delta_tau=0.1, duration=0.1),
           "sweep": {"grid": {"omega": {"start": 0.1, "stop": 60, "num": 50}, "x1": [0.1, 0.2]}}}
    cfg = write(tmp_path, raw)
    a = run("sweep", "--config", cfg, "--threads", "1").output
    b = run("sweep", "--config", cfg, env={"UDW_SWITCH_THREADS": "6"}).output
    assert a == b


def test_sweep_io_error(tmp_path):
    raw = {"protocol": proto(), "sweep": {"grid": {"omega": [1.0]}}}
    res = run("sweep", "--config", write(tmp_path, raw), "--out", str(tmp_path / "no" / "dir.csv"))
    assert res.exit_code == EXIT_IO


def test_optimize(tmp_path):
    raw = {"cavity": {"n_modes": 2048}, "protocol": proto(duration=2.05),
           "optimize": {"free": {"T": [2.001, 2.05]}, "grid_points": 11, "max_iter": 100}}
    trace = tmp_path / "trace.json"
    res = run("optimize", "--config", write(tmp_path, raw), "--out", str(trace))
    assert res.exit_code == 0
    out = parse_kv(res.output)
    assert float(out["best_duration"]) - 2 < 0.05
    assert float(out["abs_overlap"]) < 0.05
    assert '"stage": "grid"' in trace.read_text()


def test_optimize_missing_section(tmp_path):
    assert run("optimize", "--config", write(tmp_path, {"protocol": proto()})).exit_code == EXIT_CONFIG


def test_optimize_all_degenerate(tmp_path):
    raw = {"protocol": proto(), "optimize": {"free": {"delta_tau": [0.1, 0.5]}, "grid_points": 3}}
    assert run("optimize", "--config", write(tmp_path, raw)).exit_code == EXIT_NUMERIC


def test_degenerate_overlap_exit(tmp_path):
    cfg = write(tmp_path, {"protocol": proto(x1=0.0, x2=1.0, delta_tau=2.5, duration=1.3)})
    res = run("overlap", "--config", cfg)
    assert res.exit_code == EXIT_NUMERIC
    assert "numerical failure" in res.output


@pytest.mark.parametrize("content", ["protocol: [1, 2", "- just\n- a list\n", "protocol: {energy_gap: x}\n",
                                     "protocol: {energy_gap: 1, delta_tau: 1, duration: 2}\n"])
def test_config_errors(tmp_path, content):
    path = tmp_path / "bad.yaml"
    path.write_text(content)
    for cmd in ("overlap", "sweep", "classify", "bell", "oracle-check"):
        res = run(cmd, "--config", str(path))
        assert res.exit_code == EXIT_CONFIG, (cmd, res.output)
        assert "config error" in res.output


def test_missing_config_file(tmp_path):
    assert run("overlap", "--config", str(tmp_path / "nope.yaml")).exit_code == EXIT_CONFIG


def test_exit_codes_distinct():
    assert len({EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO, 0}) == 5


def test_oracle_check_default(tmp_path):
    res = run("oracle-check", "--config", write(tmp_path, {"protocol": proto()}))
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert len(lines) == 7 and all(line.startswith("PASS") for line in lines)


def test_oracle_check_out_of_regime(tmp_path):
    raw = {"protocol": proto(), "oracle": {"n_modes": 4, "coupling": 0.5, "draws": 1}}
    res = run("oracle-check", "--config", write(tmp_path, raw))
    assert res.exit_code == 0, res.output
    scaling = next(l for l in res.output.splitlines() if "scaling" in l)
    assert scaling.startswith("WARN") and "out of perturbative regime" in scaling
    assert "FAIL" not in res.output
