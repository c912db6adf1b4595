"""Dormand-Prince 5(4) with adaptive steps, hitting requested output times."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Butcher tableau
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
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepSizeUnderflow(RuntimeError):
    pass


class DomainExit(RuntimeError):
    """The right-hand side refused a state (e.g. a pole was approached)."""


@dataclass
class OdeStats:
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0


def _step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(t + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks))
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def integrate(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0: Sequence[float],
              t_out: Sequence[float], atol: float = 1e-9, rtol: float = 1e-9,
              h0: float | None = None, max_steps: int = 100_000,
              stats: OdeStats | None = None) -> np.ndarray:
    """States at each time in ``t_out`` (all on one side of ``t0``, monotone).

    Output times are hit exactly by shortening the step, so no dense output
    interpolation error enters the results.
    """
    y = np.asarray(y0, dtype=float).copy()
    t_out = [float(t) for t in t_out]
    out = np.empty((len(t_out), y.size))
    if not t_out:
        return out
    direction = 1.0 if t_out[-1] >= t0 else -1.0
    if any(direction * (b - a) < 0 for a, b in zip([t0] + t_out, t_out)):
        raise ValueError("output times must be monotone away from t0")
    stats = stats or OdeStats()
    t = float(t0)
    span = abs(t_out[-1] - t0)
    h = h0 or (1e-2 * span if span > 0 else 1e-3)
    k1 = f(t, y)
    stats.evaluations += 1
    idx = 0
    while idx < len(t_out) and t_out[idx] == t:
        out[idx] = y
        idx += 1
    for _ in range(max_steps):
        if idx >= len(t_out):
            return out
        target = t_out[idx]
        step = min(h, abs(target - t))
        hit = step == abs(target - t)
        hs = direction * step
        if abs(hs) < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size underflow at t={t}")
        y_new, err, k_last = _step(f, t, y, hs, k1)
        stats.evaluations += 6
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2))) if y.size else 0.0
        if not np.isfinite(en):
            en = 1e10
        if en <= 1.0:
            stats.steps += 1
            t = target if hit else t + hs
            y = y_new
            k1 = k_last
            while idx < len(t_out) and t_out[idx] == t:
                out[idx] = y
                idx += 1
            fac = 0.9 * en ** (-0.2) if en > 0 else 5.0
            h = step * min(5.0, max(0.2, fac)) if not hit else max(h, step * min(5.0, max(0.2, fac)))
        else:
            stats.rejected += 1
            h = step * max(0.1, 0.9 * en ** (-0.2))
    raise StepSizeUnderflow(f"maximum number of steps ({max_steps}) exceeded")


def sweep(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0: Sequence[float], grid: Sequence[float],
          atol: float = 1e-9, rtol: float = 1e-9) -> np.ndarray:
    """States at every value of ``grid``, integrating outward from ``t0`` both ways."""
    y0 = np.asarray(y0, dtype=float)
    out = np.empty((len(grid), y0.size))
    up = [i for i, g in enumerate(grid) if g >= t0]
    down = [i for i, g in enumerate(grid) if g < t0]
    up.sort(key=lambda i: grid[i])
    down.sort(key=lambda i: -grid[i])
    for idx in (up, down):
        if idx:
            out[idx] = integrate(f, t0, y0, [grid[i] for i in idx], atol=atol, rtol=rtol)
    return out
