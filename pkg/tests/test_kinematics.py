import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from udw_switch import (InteractionRegions, SeparationClass, TrajectoryParams, classify_separation,
                        delta_tau, delta_tau_asymptotic, proper_time_hyperbolic)
from udw_switch.errors import DomainError


def speed(t, accel, total):
    """Speed along four hyperbolic legs: speed up, slow down, then the same on the way back."""
    quarter = total / 4.0
    s = t % (2 * quarter)
    s = s if s <= quarter else 2 * quarter - s
    return accel * s / math.sqrt(1.0 + (accel * s) ** 2)


def worldline_proper_time(accel, total):
    edges = np.linspace(0.0, total, 5)
    return sum(quad(lambda t: math.sqrt(1.0 - speed(t, accel, total) ** 2), a, b,
                    epsabs=0, epsrel=1e-13, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))


@pytest.mark.parametrize("accel,total,expected", [
    (1.0, 4.0, 3.52549),
    (4.0, 4.0, 2.09471),
])
def test_proper_time_examples(accel, total, expected):
    got = proper_time_hyperbolic(accel, total)
    assert got == pytest.approx(expected, abs=1e-5)
    assert got == pytest.approx(worldline_proper_time(accel, total), rel=1e-10)


def test_inertial_limit():
    assert proper_time_hyperbolic(1e-9, 10.0) == pytest.approx(10.0, abs=1e-12)


@pytest.mark.parametrize("accel,total", [(0, 1), (-1, 1), (1, 0), (1, -2)])
def test_proper_time_domain(accel, total):
    with pytest.raises(DomainError):
        proper_time_hyperbolic(accel, total)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_dilation_and_monotonicity(accel, total):
    tau = proper_time_hyperbolic(accel, total)
    assert tau < total
    assert proper_time_hyperbolic(accel * 1.5, total) < tau


def test_delta_tau_against_mpmath():
    mpmath.mp.dps = 50
    ref = 4 * mpmath.asinh(mpmath.mpf(10) / 4) - 2 * mpmath.asinh(mpmath.mpf(20) / 4)
    got = delta_tau(TrajectoryParams(2.0, 1.0, 10.0))
    assert abs(got - float(ref)) < 1e-13
    assert got == pytest.approx(1.96405, abs=1e-5)


def test_delta_tau_nearly_equal_accelerations():
    assert abs(delta_tau(TrajectoryParams(1.0 + 1e-12, 1.0, 7.0))) < 1e-10


@pytest.mark.parametrize("up,down", [(1.0, 1.0), (0.5, 1.0)])
def test_delta_tau_requires_ordering(up, down):
    with pytest.raises(DomainError):
        delta_tau(TrajectoryParams(up, down, 5.0))


def test_trajectory_validation():
    with pytest.raises(DomainError):
        TrajectoryParams(1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        TrajectoryParams(1.0, 0.5, math.nan)


def test_delta_tau_monotone_and_unbounded():
    grid = np.logspace(-1, 8, 60)
    vals = [delta_tau(TrajectoryParams(1.0, 0.5, t)) for t in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 30


def test_asymptotic_examples():
    assert delta_tau_asymptotic(TrajectoryParams(1.3, 1.3, 50.0)) == 0.0
    p = TrajectoryParams(1.0, 0.5, 1e4)
    assert delta_tau_asymptotic(p) == pytest.approx(delta_tau(p), rel=1e-4)
    big = TrajectoryParams(1.0, 0.5, 1e6)
    assert delta_tau_asymptotic(big) == pytest.approx(delta_tau(big), rel=1e-6)


def test_asymptotic_error_shrinks_quadratically():
    errs = [abs(delta_tau_asymptotic(p) - delta_tau(p))
            for p in (TrajectoryParams(2.0, 1.0, 1e2), TrajectoryParams(2.0, 1.0, 1e4))]
    assert errs[0] / errs[1] > 1e3


def test_asymptotic_rejects_reversed():
    with pytest.raises(DomainError):
        delta_tau_asymptotic(TrajectoryParams(0.5, 1.0, 10.0))


@pytest.mark.parametrize("dtau,dur,expected", [
    (0.1, 0.1, SeparationClass.SPACELIKE),
    (3.0, 2.0, SeparationClass.TIMELIKE),
    (1.0, 0.5, SeparationClass.MIXED),
])
def test_classify_examples(dtau, dur, expected):
    assert classify_separation(InteractionRegions(0.25, 0.75, dtau, dur)) is expected


def test_lightlike_ties_are_mixed():
    # dtau + T == dx exactly in binary: 0.25 + 0.25 == 0.5
    assert classify_separation(InteractionRegions(0.25, 0.75, 0.25, 0.25)) is SeparationClass.MIXED
    # dtau - T == dx: 1.0 - 0.5 == 0.5
    assert classify_separation(InteractionRegions(0.0, 0.5, 1.0, 0.5)) is SeparationClass.MIXED


positions = st.floats(0, 1)


@given(positions, positions, st.floats(0.01, 5), st.floats(0.01, 1.0))
def test_classify_symmetric_in_positions(x1, x2, dtau, frac):
    if x1 == x2:
        return
    dur = dtau * frac
    a = classify_separation(InteractionRegions(x1, x2, dtau, dur))
    b = classify_separation(InteractionRegions(x2, x1, dtau, dur))
    assert a is b


def test_region_validation():
    with pytest.raises(DomainError):
        InteractionRegions(0.2, 0.8, 1.0, 2.0)
    with pytest.raises(DomainError):
        InteractionRegions(0.2, 0.8, -1.0, 0.5)
    with pytest.raises(DomainError):
        InteractionRegions(0.2, 0.8, 1.0, 0.0)
    # simultaneous windows may have any duration
    InteractionRegions(0.2, 0.8, 0.0, 5.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        InteractionRegions(0.5, 0.5, 1.0, 0.5)
    assert caught
