"""Classical RK4 stepping and the observer loop."""

import math

import numpy as np
import pytest

from mmfsphere.errors import NonFiniteState
from mmfsphere.timestepping import advance, rk4_step


def test_rk4_fourth_order_slope():
    errs = []
    dts = [1.0 / n for n in (8, 16, 32, 64)]
    for dt in dts:
        y = np.array([1.0])
        y = advance(y, lambda t, y: -y, dt, round(1.0 / dt))
        errs.append(abs(float(y[0]) - math.exp(-1.0)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 4.0) <= 0.1


def test_rk4_exact_for_cubic_forcing():
    # pure time forcing reduces RK4 to a Simpson-like rule, degree 3 exact
    dt = 0.37
    y = rk4_step(np.array([0.0]), lambda t, y: np.array([t ** 3]), dt)
    assert abs(float(y[0]) - dt ** 4 / 4.0) <= 1e-15


def test_tuple_state_oscillator():
    def rhs(t, state):
        pos, vel = state
        return vel, -pos

    state = (np.array([1.0]), np.array([0.0]))
    state = advance(state, rhs, 2.0 * math.pi / 2000, 2000)
    assert isinstance(state, tuple)
    assert abs(float(state[0][0]) - 1.0) <= 1e-10
    assert abs(float(state[1][0])) <= 1e-10


def test_advance_matches_manual_steps():
    rhs = lambda t, y: np.sin(t) - 0.5 * y
    dt = 0.01
    y_manual = np.array([0.2, -0.4])
    for k in range(5):
        y_manual = rk4_step(y_manual, rhs, dt, k * dt)
    y_loop = advance(np.array([0.2, -0.4]), rhs, dt, 5)
    assert np.array_equal(y_manual, y_loop)


def test_non_finite_state_carries_time():
    def rhs(t, y):
        return y * np.inf

    with pytest.raises(NonFiniteState) as exc:
        advance(np.array([1.0]), rhs, 0.125, 10, t0=2.0)
    assert exc.value.time == pytest.approx(2.125)


def test_observer_cadence():
    seen = []

    def observer(step, t, y):
        seen.append(step)

    advance(np.array([1.0]), lambda t, y: -y, 0.1, 10,
            observer=observer, observe_every=3)
    assert seen == [0, 3, 6, 9, 10]

    seen.clear()
    advance(np.array([1.0]), lambda t, y: -y, 0.1, 0,
            observer=observer, observe_every=3)
    assert seen == [0]

    seen.clear()
    advance(np.array([1.0]), lambda t, y: -y, 0.1, 5,
            observer=observer, observe_every=100)
    assert seen == [0, 5]


def test_observer_times_are_uniform():
    times = []
    advance(np.array([0.0]), lambda t, y: np.array([1.0]), 0.25, 8, t0=1.0,
            observer=lambda s, t, y: times.append(t), observe_every=2)
    assert times == pytest.approx([1.0, 1.5, 2.0, 2.5, 3.0])
