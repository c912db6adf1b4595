"""Finite-difference weights (Fornberg's recursion) and grid derivatives."""

from __future__ import annotations

import numpy as np


def fornberg_weights(x0: float, xs, m: int) -> np.ndarray:
    """Weights w[k, j] so that f^(k)(x0) ~ sum_j w[k, j] f(xs[j]) for k <= m."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    c = np.zeros((m + 1, n))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def derivative(values: np.ndarray, grid, axis: int = 0, order: int = 1, points: int = 9) -> np.ndarray:
    """Derivative along ``axis`` using ``points``-wide stencils.

    Stencils are centred where possible and shifted inward near the edges,
    so every node gets an estimate of the same formal accuracy.
    """
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    n = len(grid)
    if values.shape[axis] != n:
        raise ValueError("grid length does not match the array")
    width = min(points, n)
    if width <= order:
        raise ValueError("grid too coarse for the requested derivative")
    moved = np.moveaxis(values, axis, 0)
    out = np.empty_like(moved)
    half = width // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = np.arange(lo, lo + width)
        w = fornberg_weights(grid[i], grid[idx], order)[order]
        out[i] = np.tensordot(w, moved[idx], axes=(0, 0))
    return np.moveaxis(out, 0, axis)
