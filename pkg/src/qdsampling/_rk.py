"""Explicit Runge-Kutta steppers for batched real ODE systems.

States are arrays of shape ``(n_components, n_batch)``. The adaptive
stepper controls the *maximum* scaled error over every component of every
batch member, so a large batch never dilutes the accuracy of one member.
"""
from __future__ import annotations

import numpy as np

from .errors import IntegrationError

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


def dopri5(f, t0, t1, y0, *, rtol=1e-9, atol=1e-12, h0=None, max_steps=100_000, store=False):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1``.

    Returns ``(y_final, times, states)``; ``times``/``states`` hold every
    accepted step when ``store`` is true and are empty lists otherwise.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t1) - t
    if span <= 0:
        raise ValueError("t1 must be greater than t0")
    h = span / 100 if h0 is None else float(h0)
    times, states = ([t], [y.copy()]) if store else ([], [])
    k = np.empty((7,) + y.shape)
    k[0] = f(t, y)
    n_steps = 0
    while t < t1:
        if n_steps >= max_steps:
            raise IntegrationError(
                f"step budget of {max_steps} exhausted before t={t1}", last_time=t
            )
        h = min(h, t1 - t)
        for i in range(1, 7):
            yi = y + h * np.tensordot(_A[i], k[:i], axes=1)
            k[i] = f(t + _C[i] * h, yi)
        y_new = yi  # the 7th stage is evaluated at the 5th-order solution (FSAL)
        err = h * np.tensordot(_E, k, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        n_steps += 1
        if not np.isfinite(err_norm):
            h *= 0.1
            if h < 1e-14 * span:
                raise IntegrationError("non-finite derivative", last_time=t)
            continue
        if err_norm <= 1.0:
            t = t + h if t1 - t > h else float(t1)
            y = y_new
            k[0] = k[6]
            if store:
                times.append(t)
                states.append(y.copy())
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
        else:
            factor = max(0.2, 0.9 * err_norm ** -0.2)
        h *= factor
        if h < 1e-14 * span:
            raise IntegrationError("step size underflow", last_time=t)
    return y, times, states


def rk4_fixed(f, t0, t1, y0, dt):
    """Classical fourth-order Runge-Kutta on a uniform grid with step <= ``dt``."""
    y = np.array(y0, dtype=float)
    t = float(t0)
    n = int(np.ceil((t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y
