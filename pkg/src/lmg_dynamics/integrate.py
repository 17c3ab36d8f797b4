"""Adaptive classical Runge-Kutta 4 with step-doubling error control."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import NumericalError


def _rk4_step(f, s, y, h):
    k1 = f(s, y)
    k2 = f(s + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(s + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    s_out: np.ndarray,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    h_init: float | None = None,
    h_min: float = 1e-13,
    accept: Callable[[np.ndarray], bool] | None = None,
) -> np.ndarray:
    """Integrate y' = f(s, y) and return y at every point of ``s_out``.

    Each interval between output points is integrated separately so that
    right-hand sides built from piecewise-linear tables never straddle a
    kink. A step is taken as one full RK4 step and two half steps; their
    difference estimates the local error. ``accept`` can veto a step whose
    result is otherwise accurate (e.g. a negative probability), which halves
    the step instead of clipping the state.
    """
    s_out = np.asarray(s_out, dtype=float)
    y = np.array(y0, copy=True)
    out = np.empty((s_out.size,) + y.shape, dtype=y.dtype)
    out[0] = y
    h = h_init if h_init is not None else (s_out[-1] - s_out[0]) / 1000.0
    for k in range(s_out.size - 1):
        s, s_end = s_out[k], s_out[k + 1]
        while s < s_end:
            h_try = min(h, s_end - s)
            last = h_try == s_end - s
            y_full = _rk4_step(f, s, y, h_try)
            y_half = _rk4_step(f, s, y, 0.5 * h_try)
            y_two = _rk4_step(f, s + 0.5 * h_try, y_half, 0.5 * h_try)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_two))
            err = float(np.max(np.abs(y_two - y_full) / scale)) / 15.0
            ok = np.isfinite(err) and err <= 1.0
            if ok and accept is not None and not accept(y_two):
                ok = False
                h = 0.5 * h_try
            elif ok:
                s = s_end if last else s + h_try
                y = y_two
                grow = min(4.0, max(1.0, 0.9 * err**-0.2)) if err > 0 else 4.0
                # a step clipped to the interval end says nothing about the usable size
                h = max(h, h_try * grow) if last else h_try * grow
            else:
                h = h_try * (max(0.1, 0.9 * err**-0.2) if np.isfinite(err) else 0.1)
            if not ok and h < h_min:
                raise NumericalError(f"step size underflow at s={s:.12g}")
        out[k + 1] = y
    return out
