"""Closed-form polar solution of the conservative system and its numerical check.

With ``H``, the anchored ``I0`` and ``I2`` fixed by the initial state::

    r^2(T) = (2 H T - I2)^2 / (2 H) + I0 / H
    int dtheta / sqrt(I0 - Fbar(theta)) = +/- arctan((2 H T - I2) / sqrt(2 I0)) / sqrt(I0)

where ``Fbar(theta) = (tan^2 theta + 1) N(tan theta)``.  The angular relation
equates two indefinite integrals, so it is checked as a difference identity
along each stretch where ``theta`` is monotone, anchored at the stretch start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NotConservativeError, TurningPointError
from .expr import Expression, adaptive_quad
from .integrate import Trajectory
from .invariants import angular_momentum, ermakov_I0, fi_I2, hamiltonian
from .model import CartesianState, Conservative, SystemSpec


@dataclass(frozen=True)
class SolutionConstants:
    H: float
    I0: float
    I2: float

    @classmethod
    def from_state(cls, spec: SystemSpec, s: CartesianState) -> "SolutionConstants":
        return cls(hamiltonian(spec, s), ermakov_I0(spec, s), fi_I2(spec, s))


def fbar(N: Expression, theta: float) -> float:
    """``(tan^2 theta + 1) N(tan theta)``.

    Raises:
        DomainError: ``cos theta`` is (numerically) zero, or ``N`` fails.
    """
    c = math.cos(theta)
    if abs(c) < 1e-15:
        raise DomainError(f"tan is singular at theta={theta!r}")
    t = math.sin(theta) / c
    return (t * t + 1.0) * N(t)


def radial_solution(k: SolutionConstants, T: float) -> float:
    """``r^2(T)``; requires ``H > 0``."""
    if not k.H > 0:
        raise ValueError(f"radial solution needs H > 0, got {k.H!r}")
    s = 2.0 * k.H * T - k.I2
    return s * s / (2.0 * k.H) + k.I0 / k.H


def theta_time_rhs(k: SolutionConstants, T: float, sign: int = 1) -> float:
    """``sign * arctan((2 H T - I2) / sqrt(2 I0)) / sqrt(I0)``; requires ``I0 > 0``."""
    if not k.I0 > 0:
        raise ValueError(f"the arctan form needs I0 > 0, got {k.I0!r}")
    return sign * math.atan((2.0 * k.H * T - k.I2) / math.sqrt(2.0 * k.I0)) / math.sqrt(k.I0)


def theta_quadrature(N: Expression, theta0: float, theta1: float, I0: float, tol: float = 1e-12) -> float:
    """``int_{theta0}^{theta1} dtheta / sqrt(I0 - Fbar(theta))``.

    Square-root singularities at either end point (a turning point sitting
    exactly on an end) are removed by the substitution
    ``theta = theta0 + (theta1 - theta0)(1 - cos phi)/2``.

    Raises:
        TurningPointError: ``Fbar >= I0`` somewhere strictly inside the interval.
    """
    if theta0 == theta1:
        return 0.0
    width = theta1 - theta0

    def gap(theta: float) -> float:
        return I0 - fbar(N, theta)

    probes = np.linspace(theta0, theta1, 66)[1:-1]
    for a, b in zip(probes[:-1], probes[1:]):
        if gap(a) <= 0.0:
            raise TurningPointError(f"Fbar(theta) >= I0 near theta={a:.6g}", (float(a), float(b)))

    def integrand(phi: float) -> float:
        theta = theta0 + 0.5 * width * (1.0 - math.cos(phi))
        g = gap(theta)
        if g <= 0.0:
            raise TurningPointError(f"Fbar(theta) >= I0 at theta={theta:.12g}", (theta, theta))
        return 0.5 * width * math.sin(phi) / math.sqrt(g)

    return adaptive_quad(integrand, 0.0, math.pi, tol)[0]


TimeRhs = Callable[[SolutionConstants, float, int], float]


@dataclass
class Stretch:
    """Samples ``[start, stop]`` (inclusive) over which ``theta`` is monotone."""

    start: int
    stop: int
    t_start: float
    t_stop: float
    sign: int
    max_residual: float = 0.0


@dataclass
class AnalyticReport:
    constants: SolutionConstants
    radial_max_residual: float
    theta_max_residual: float
    stretches: list[Stretch] = field(default_factory=list)
    turning_points: list[tuple[float, float]] = field(default_factory=list)
    tolerance: float = 1e-6

    @property
    def radial_pass(self) -> bool:
        return self.radial_max_residual < self.tolerance

    @property
    def theta_pass(self) -> bool:
        return self.theta_max_residual < self.tolerance

    @property
    def passes(self) -> bool:
        return self.radial_pass and self.theta_pass


def _stretches(traj: Trajectory, theta: np.ndarray) -> tuple[list[Stretch], list[tuple[float, float]]]:
    L = np.array([angular_momentum(s) for s in traj.samples])
    t = traj.times
    n = len(L)
    signs = np.sign(L)
    # Samples with L == 0 take the direction in which theta actually moves next.
    for i in range(n):
        if signs[i] == 0:
            j = i + 1 if i + 1 < n else i - 1
            signs[i] = np.sign(theta[j] - theta[i]) * (1 if j > i else -1) or 1
    stretches, turning = [], []
    start = 0
    for i in range(1, n):
        if signs[i] != signs[i - 1]:
            turning.append((float(t[i - 1]), float(t[i])))
            stretches.append(Stretch(start, i - 1, float(t[start]), float(t[i - 1]), int(signs[start])))
            start = i
    stretches.append(Stretch(start, n - 1, float(t[start]), float(t[n - 1]), int(signs[start])))
    return stretches, turning


def _safe(fn: TimeRhs, k: SolutionConstants, T: float, sign: int) -> float:
    # A closed form that leaves its domain counts as an infinite residual.
    try:
        return fn(k, float(T), sign)
    except (ValueError, OverflowError, ZeroDivisionError):
        return math.nan


def verify_solution(
    traj: Trajectory,
    tol: float = 1e-6,
    time_rhs: TimeRhs = theta_time_rhs,
    quad_tol: Optional[float] = None,
) -> AnalyticReport:
    """Compare a conservative autonomous trajectory with the closed-form solution.

    Check (a): ``|r^2 - radial_solution(T)|`` at every sample.  Check (b): on
    every monotone-``theta`` stretch, the angular quadrature from the stretch
    start minus the change of ``time_rhs`` over the same times.  Turning points
    split the trajectory into stretches rather than failing the check.
    ``time_rhs`` is injectable so alternative closed forms can be compared.
    """
    spec = traj.spec
    if not isinstance(spec.form, Conservative) or not spec.autonomous:
        raise NotConservativeError("verify_solution needs a conservative autonomous trajectory")
    N = spec.form.N
    first = traj.samples[0]
    k = SolutionConstants.from_state(spec, first)
    if not (k.H > 0 and k.I0 > 0):
        raise ValueError(f"closed form needs H > 0 and I0 > 0 (H={k.H!r}, I0={k.I0!r})")

    T = traj.times
    r2 = np.array([s.x * s.x + s.y * s.y for s in traj.samples])
    radial = np.array([radial_solution(k, Ti) for Ti in T])
    radial_res = float(np.max(np.abs(r2 - radial)))

    theta = np.unwrap(np.array([math.atan2(s.y, s.x) for s in traj.samples]))
    stretches, turning = _stretches(traj, theta)
    piece_tol = quad_tol if quad_tol is not None else min(1e-12, tol * 1e-3 / max(1, len(T)))
    worst = 0.0
    for st in stretches:
        lhs = 0.0
        rhs0 = _safe(time_rhs, k, T[st.start], st.sign)
        for i in range(st.start + 1, st.stop + 1):
            lhs += theta_quadrature(N, theta[i - 1], theta[i], k.I0, piece_tol)
            res = abs(lhs - (_safe(time_rhs, k, T[i], st.sign) - rhs0))
            if not math.isfinite(res):
                res = math.inf
            st.max_residual = max(st.max_residual, res)
        worst = max(worst, st.max_residual)
    return AnalyticReport(k, radial_res, worst, stretches, turning, tol)
