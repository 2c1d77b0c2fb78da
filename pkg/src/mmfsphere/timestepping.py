"""Explicit time integration shared by all solvers."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteState

State = "np.ndarray | tuple[np.ndarray, ...]"


def _combine(y, terms):
    """y + sum(c * k) elementwise over a state (array or tuple of arrays)."""
    if isinstance(y, np.ndarray):
        out = y.copy()
        for c, k in terms:
            out += c * k
        return out
    return tuple(_combine(yi, [(c, k[i]) for c, k in terms])
                 for i, yi in enumerate(y))


def _check_finite(y, t):
    arrays = (y,) if isinstance(y, np.ndarray) else y
    for a in arrays:
        if not np.isfinite(a).all():
            raise NonFiniteState(
                f"non-finite values in time-stepped state at t={t:.6f}",
                time=t)


def rk4_step(y, rhs: Callable, dt: float, t: float = 0.0):
    """One classical fourth-order Runge-Kutta step.

    ``rhs(t, y)`` returns the tendency with the same structure as ``y``
    (a single array or a tuple of arrays).  Raises NonFiniteState if the
    update produces NaN or Inf, which is how instability surfaces.
    """
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, _combine(y, [(0.5 * dt, k1)]))
    k3 = rhs(t + 0.5 * dt, _combine(y, [(0.5 * dt, k2)]))
    k4 = rhs(t + dt, _combine(y, [(dt, k3)]))
    out = _combine(y, [(dt / 6.0, k1), (dt / 3.0, k2),
                       (dt / 3.0, k3), (dt / 6.0, k4)])
    _check_finite(out, t + dt)
    return out


def advance(y, rhs: Callable, dt: float, n_steps: int, t0: float = 0.0,
            observer: Callable | None = None, observe_every: int = 100):
    """March ``n_steps`` RK4 steps, calling ``observer(step, t, y)`` at the
    start, every ``observe_every`` steps, and at the end."""
    t = t0
    if observer is not None:
        observer(0, t, y)
    for step in range(1, n_steps + 1):
        y = rk4_step(y, rhs, dt, t)
        t = t0 + step * dt
        if observer is not None and (step % observe_every == 0
                                     or step == n_steps):
            observer(step, t, y)
    return y
