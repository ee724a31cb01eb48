"""Composite Newton-Cotes weights on uniform grids over [0, 1]."""

from __future__ import annotations

import numpy as np


def simpson_weights(k: int, h: float) -> np.ndarray:
    """Weights for ``k`` intervals of width ``h``; O(h^4) for every ``k >= 2``.

    Odd ``k >= 3`` closes with a Simpson 3/8 panel on the last three
    intervals.  ``k == 1`` falls back to the trapezoid rule.
    """
    if k < 0:
        raise ValueError("number of intervals must be nonnegative")
    w = np.zeros(k + 1)
    if k == 0:
        return w
    if k == 1:
        w[:] = h / 2.0
        return w
    m = k if k % 2 == 0 else k - 3
    if m > 0:
        w[0:m + 1:2] += 2.0 * h / 3.0
        w[1:m:2] += 4.0 * h / 3.0
        w[0] -= h / 3.0
        w[m] -= h / 3.0
    if m < k:
        w[m:] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def trapezoid_weights(k: int, h: float) -> np.ndarray:
    w = np.full(k + 1, h)
    w[0] = w[-1] = h / 2.0
    return w


def quadrature_weights(n: int) -> np.ndarray:
    """Composite Simpson on ``n`` even intervals of [0, 1], trapezoid when ``n`` is odd."""
    if n < 1:
        raise ValueError("need at least one interval")
    h = 1.0 / n
    if n % 2 == 0:
        return simpson_weights(n, h)
    return trapezoid_weights(n, h)


def quadrature(values) -> float:
    """Approximate the integral over [0, 1] of node values on the uniform grid."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size < 2:
        raise ValueError("expected a 1-d array of at least 2 node values")
    return float(quadrature_weights(vals.size - 1) @ vals)
