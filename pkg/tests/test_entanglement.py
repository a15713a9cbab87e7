import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_params
from udw_switch import (EffectiveTwoQubit, chsh_max, chsh_search, concurrence, orthogonal_point,
                        post_selected_state, protocol_bell_report)
from udw_switch.entanglement import branch_probability
from udw_switch.errors import DegenerateStateError, DomainError

SQRT2 = math.sqrt(2)


def brute_force_state(s, sign):
    """Tensor two explicit 2-vectors per wing and add the branches."""
    t = math.sqrt(max(0.0, 1 - abs(s) ** 2))
    right = np.array([1, 0], dtype=complex)
    left = np.array([s, t], dtype=complex)
    psi = np.kron(right, right) + (1 if sign == "+" else -1) * np.kron(left, left)
    return psi / np.linalg.norm(psi)


def purity_concurrence(psi):
    m = psi.reshape(2, 2)
    rho = m @ m.conj().T
    return math.sqrt(max(0.0, 2 * (1 - np.trace(rho @ rho).real)))


def test_orthogonal_branches_give_bell_state():
    q = post_selected_state(0.0, "+")
    assert np.allclose(q.amplitudes, np.array([1, 0, 0, 1]) / SQRT2, atol=1e-15)
    assert concurrence(q) == pytest.approx(1.0, abs=1e-15)
    assert chsh_max(q) == pytest.approx(2 * SQRT2, abs=1e-12)


def test_identical_branches_give_product_state():
    q = post_selected_state(1.0, "+")
    assert np.allclose(q.amplitudes, [1, 0, 0, 0], atol=1e-15)
    assert concurrence(q) == 0.0
    assert chsh_max(q) == pytest.approx(2.0, abs=1e-12)


def test_half_overlap_example():
    s = 0.5
    q = post_selected_state(s, "+")
    expected = np.array([1 + s * s, s * math.sqrt(1 - s * s), s * math.sqrt(1 - s * s), 1 - s * s])
    expected /= math.sqrt(2 + 2 * s * s)
    assert np.allclose(q.amplitudes, expected, atol=1e-15)
    assert np.allclose(q.amplitudes, brute_force_state(s, "+"), atol=1e-15)
    assert concurrence(q) == pytest.approx(0.6, abs=1e-14)
    assert purity_concurrence(q.amplitudes) == pytest.approx(0.6, abs=1e-12)
    assert chsh_max(q) == pytest.approx(2.3324, abs=1e-4)
    assert chsh_search(q) == pytest.approx(chsh_max(q), abs=1e-4)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(-math.pi, math.pi), st.sampled_from("+-"))
def test_matches_brute_force(mag, phase, sign):
    s = mag * complex(math.cos(phase), math.sin(phase))
    if sign == "-" and mag > 1 - 1e-6:
        return
    q = post_selected_state(s, sign)
    assert np.allclose(q.amplitudes, brute_force_state(s, sign), atol=1e-12)
    assert abs(np.linalg.norm(q.amplitudes) - 1) < 1e-12
    assert concurrence(q) == pytest.approx(purity_concurrence(q.amplitudes), abs=1e-7)
    assert q.amplitudes[1] == q.amplitudes[2]


def test_domain_errors():
    with pytest.raises(DomainError):
        post_selected_state(1.01, "+")
    with pytest.raises(DegenerateStateError):
        post_selected_state(1.0, "-")
    with pytest.raises(ValueError):
        post_selected_state(0.5, "x")


def test_concurrence_monotone_in_overlap():
    vals = [concurrence(post_selected_state(s, "+")) for s in np.linspace(0, 1, 201)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_branches_coincide_at_orthogonality():
    for sign in "+-":
        assert concurrence(post_selected_state(1e-6, sign)) == pytest.approx(1.0, abs=1e-10)


def test_product_state_concurrence():
    assert concurrence(EffectiveTwoQubit([1, 0, 0, 0])) == 0.0
    assert concurrence(EffectiveTwoQubit(np.array([1, 0, 0, 1]) / SQRT2)) == pytest.approx(1.0)


def test_rejects_unnormalized():
    with pytest.raises(DomainError):
        EffectiveTwoQubit([1, 1, 0, 0])


@st.composite
def symmetric_state(draw):
    vals = [complex(draw(st.floats(-1, 1)), draw(st.floats(-1, 1))) for _ in range(3)]
    a, b, d = vals
    v = np.array([a, b, b, d])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([1, 0, 0, 0], dtype=complex), 1.0
    return EffectiveTwoQubit(v / n)


@settings(max_examples=300)
@given(symmetric_state())
def test_chsh_identity_and_bounds(q):
    c = concurrence(q)
    assert 0 <= c <= 1
    h = chsh_max(q)
    assert h <= 2 * SQRT2 + 1e-9
    assert h == pytest.approx(2 * math.sqrt(1 + c * c), abs=1e-10)


def test_reduced_state_trace():
    q = post_selected_state(0.3 + 0.2j, "-")
    assert np.trace(q.reduced_state()).real == pytest.approx(1.0)
    assert np.allclose(q.density_matrix(), q.density_matrix().conj().T)


def test_branch_probabilities_sum_to_one():
    s = 0.4 - 0.3j
    assert branch_probability(s, "+") + branch_probability(s, "-") == pytest.approx(1.0)


def test_report_near_orthogonal_point():
    rep = protocol_bell_report(orthogonal_point(1e-3, n_modes=2048), "+")
    assert rep.violates
    assert rep.chsh_max > 2.8


def test_report_simultaneous_windows():
    rep = protocol_bell_report(make_params(delta_tau=0.0, duration=0.5, gap=2.0), "+")
    assert rep.concurrence == 0.0
    assert not rep.violates
    with pytest.raises(DegenerateStateError):
        protocol_bell_report(make_params(delta_tau=0.0, duration=0.5, gap=2.0), "-")


def test_report_spacelike_sweep_minimum():
    gaps = np.linspace(0.05, 30 * math.pi - 0.05, 400)
    best = min(gaps, key=lambda g: protocol_bell_report(
        make_params(delta_tau=0.1, duration=0.1, gap=g)).overlap.__abs__())
    rep = protocol_bell_report(make_params(delta_tau=0.1, duration=0.1, gap=best))
    assert rep.violates
