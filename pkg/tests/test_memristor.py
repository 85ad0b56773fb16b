import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msnn.memristor import (
    MemristorParams,
    MemristorState,
    logistic,
    memductance,
    state_derivative,
    step_state,
    switching_rates,
)

import oracle_values as ov

P = MemristorParams()


@pytest.mark.parametrize("x, expected", [(0.0, ov.MEMDUCTANCE_X0), (1.0, ov.MEMDUCTANCE_X1),
                                         (0.5, ov.MEMDUCTANCE_HALF)])
def test_memductance_examples(x, expected):
    assert memductance(MemristorState(x), P) == pytest.approx(expected, rel=1e-12)


def test_state_derivative_at_v_on():
    # the printed "0.4994e6" rounds the exact (1 - 0) * sigma(0) / tau = 0.5e6
    rate = state_derivative(MemristorState(0.0), 0.1, P)
    assert rate == pytest.approx(ov.DXDT_X0_AT_VON, rel=1e-12)
    assert rate == pytest.approx(0.4994e6, rel=2e-3)


def test_state_derivative_fully_on_at_v_off():
    assert state_derivative(MemristorState(1.0), 0.0, P) == pytest.approx(ov.DXDT_X1_AT_VOFF, rel=1e-12)


def test_symmetric_fixed_point():
    p = MemristorParams(v_on=0.05, v_off=0.05)
    assert state_derivative(MemristorState(0.5), 0.05, p) == pytest.approx(0.0, abs=1e-6)


def test_step_state_euler_hand_step():
    nxt = step_state(MemristorState(0.0), 0.1, 1e-9, P)
    assert nxt.x == pytest.approx(ov.EULER_STEP_X0_AT_VON, rel=1e-12)


def test_step_state_equilibrium_unchanged():
    # at x = p / (p + q) the derivative vanishes
    vd = 0.05
    on, off = logistic((vd - P.v_on) / P.k_th), logistic((P.v_off - vd) / P.k_th)
    x_eq = on / (on + off)
    for scheme in ("euler", "exp_euler"):
        assert step_state(MemristorState(x_eq), vd, 1e-9, P, scheme).x == pytest.approx(x_eq, abs=1e-15)


def test_saturated_device_stays_at_one():
    # the off window is still ~1.6e-6 at 200 mV, so x may creep down by ~1e-9 but never past 1
    x = step_state(MemristorState(1.0), 0.2, 1e-9, P).x
    assert x <= 1.0 and x == pytest.approx(1.0, abs=1e-8)
    assert step_state(MemristorState(1.0), 2.0, 1e-9, P).x == 1.0


def test_dt_guard():
    with pytest.raises(ValueError, match="stability"):
        step_state(MemristorState(0.0), 0.0, 0.2e-6, P)
    step_state(MemristorState(0.0), 0.0, 0.1e-6, P)


def test_param_validation():
    with pytest.raises(ValueError):
        MemristorParams(r_on=1e5, r_off=1e3)
    with pytest.raises(ValueError):
        MemristorParams(tau=0.0)
    with pytest.raises(ValueError):
        MemristorState(1.5)


def test_state_derivative_matches_symbolic_form_on_random_grid():
    rng = np.random.default_rng(7)
    for x, vd in zip(rng.uniform(0, 1, 100), rng.uniform(-0.3, 0.3, 100)):
        ref = ((1 - x) / (1 + math.exp(-(vd - P.v_on) / P.k_th))
               - x / (1 + math.exp(-(P.v_off - vd) / P.k_th))) / P.tau
        got = state_derivative(MemristorState(x), vd, P)
        assert got == pytest.approx(ref, rel=1e-12, abs=1e-12 * 1 / P.tau)


@given(st.floats(-2.0, 2.0))
def test_shared_exponential_windows_match_logistic(vd):
    on, off = switching_rates(vd, P.v_on, P.v_off, P.k_th)
    assert on == pytest.approx(logistic((vd - P.v_on) / P.k_th), rel=1e-12, abs=1e-300)
    assert off == pytest.approx(logistic((P.v_off - vd) / P.k_th), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=200),
       st.sampled_from(["euler", "exp_euler"]), st.floats(1e-10, 1e-7))
def test_state_stays_in_unit_interval(x0, drops, scheme, dt):
    s = MemristorState(x0)
    for vd in drops:
        s = step_state(s, vd, dt, P, scheme)
        assert 0.0 <= s.x <= 1.0


@given(st.floats(0, 1), st.floats(0, 1))
def test_memductance_bounded_and_monotone(a, b):
    ga, gb = memductance(MemristorState(a), P), memductance(MemristorState(b), P)
    assert 1 / P.r_off - 1e-18 <= ga <= 1 / P.r_on + 1e-18
    if b - a > 1e-9:
        assert ga < gb
    elif a <= b:
        assert ga <= gb


@pytest.mark.parametrize("vd, target", [(0.4, 1.0), (-0.3, 0.0)])
def test_constant_drive_converges_monotonically(vd, target):
    s = MemristorState(0.5)
    dist = abs(s.x - target)
    for _ in range(1000):
        s = step_state(s, vd, 1e-8, P)
        d = abs(s.x - target)
        assert d <= dist
        dist = d
    assert dist < 1e-3
