import math

import pytest

from udw_switch import CavityConfig, InteractionRegions, ProtocolParams


def make_params(x1=0.25, x2=0.75, delta_tau=3.0, duration=2.0, gap=math.pi, n_modes=30,
                length=1.0, mass=0.0, coupling=1e-3):
    return ProtocolParams(CavityConfig(length, mass, n_modes),
                          InteractionRegions(x1, x2, delta_tau, duration), gap, coupling)


@pytest.fixture
def generic_params():
    # non-resonant timelike point
    return make_params(delta_tau=2.5, duration=1.3, gap=2.1)


ACCEPTANCE_LINES: list[str] = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
