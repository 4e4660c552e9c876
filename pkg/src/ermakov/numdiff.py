"""Central finite differences with Richardson extrapolation."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def derivative(f: Callable[[float], float], x: float, h: float = 1e-3, levels: int = 3) -> float:
    """Derivative of ``f`` at ``x``.

    Central differences at steps ``h, h/2, ..., h/2^(levels-1)`` are combined
    by Richardson extrapolation, cancelling the ``h^2, h^4, ...`` error terms.
    """
    table = []
    step = h
    for _ in range(levels):
        table.append((f(x + step) - f(x - step)) / (2.0 * step))
        step *= 0.5
    for j in range(1, levels):
        factor = 4.0**j
        table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
    return table[0]


def second_derivative(f: Callable[[float], float], x: float, h: float = 1e-3, levels: int = 3) -> float:
    table = []
    step = h
    f0 = f(x)
    for _ in range(levels):
        table.append((f(x + step) - 2.0 * f0 + f(x - step)) / step**2)
        step *= 0.5
    for j in range(1, levels):
        factor = 4.0**j
        table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
    return table[0]


def gradient(
    f: Callable[[np.ndarray], float], point: Sequence[float], rel_step: float = 1e-3, levels: int = 3
) -> np.ndarray:
    """Gradient of a scalar function of several variables.

    The step along each axis is ``rel_step * max(1, |x_i|)``.
    """
    p = np.asarray(point, dtype=float)
    out = np.empty_like(p)
    for i in range(p.size):

        def along(t: float, i: int = i) -> float:
            q = p.copy()
            q[i] = t
            return f(q)

        out[i] = derivative(along, p[i], rel_step * max(1.0, abs(p[i])), levels)
    return out
