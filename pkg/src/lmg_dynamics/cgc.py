"""Analytic critical gap curve in integrated-density-of-states coordinates."""

from __future__ import annotations

import numpy as np

from .core import ConfigError, Direction


def cgc_x(s):
    """Integrated density of states x_c(s) on the critical gap curve, s in [0.5, 1].

    arccot uses the principal branch in (0, pi); it is evaluated as
    arctan2(sqrt(1-s), sqrt(s) + sqrt(2s-1)) so that s = 1 is finite.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr < 0.5) | (s_arr > 1.0)) or np.any(np.isnan(s_arr)):
        raise ConfigError("cgc_x is defined for s in [0.5, 1]")
    one_minus = 1.0 - s_arr
    two_s_minus = 2.0 * s_arr - 1.0
    acot = np.arctan2(np.sqrt(one_minus), np.sqrt(s_arr) + np.sqrt(two_s_minus))
    x = 1.0 - (4.0 / np.pi) * acot - (2.0 / (np.pi * s_arr)) * np.sqrt(one_minus * two_s_minus)
    x = np.clip(x, 0.0, 1.0)
    return float(x) if np.ndim(x) == 0 else x


def cgc_invert(x, tol: float = 0.0):
    """Return s in [0.5, 1] with cgc_x(s) = x by bisection (vectorized).

    With tol=0 the bisection runs to full double resolution and keeps the
    bracket end whose x is closer; the curve is vertical at s = 1, so near
    x = 1 the s resolution limits how well x itself can be matched.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)) or np.any(np.isnan(x_arr)):
        raise ConfigError("cgc_invert needs x in [0, 1]")
    lo = np.full(x_arr.shape, 0.5)
    hi = np.ones(x_arr.shape)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        below = cgc_x(mid) < x_arr
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    if tol > 0:
        s = 0.5 * (lo + hi)
    else:
        s = np.where(np.abs(cgc_x(lo) - x_arr) <= np.abs(cgc_x(hi) - x_arr), lo, hi)
    s = np.where(x_arr == 0.0, 0.5, np.where(x_arr == 1.0, 1.0, s))
    return float(s) if np.ndim(s) == 0 else s


def cgc_crossing(x, direction) -> float | np.ndarray:
    """s at which level fraction x meets the curve for a given sweep direction.

    The backward schedule is the forward one with s -> 1 - s.
    """
    s = cgc_invert(x)
    return s if Direction(direction) is Direction.FORWARD else 1.0 - s
