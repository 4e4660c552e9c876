"""Map the time-dependent system to the autonomous one and back.

With ``rho'' + omega(t)^2 rho = 0`` the variables ``T = int rho^-2 dt``,
``X = x/rho``, ``Y = y/rho`` remove ``omega``.  The velocity map follows by the
chain rule, ``dX/dT = rho^2 d(x/rho)/dt = rho x' - rho' x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ErmakovError, RhoZeroCrossing
from .expr import Expression
from .integrate import Control, Trajectory, _Crossing, integrate, solve_ode
from .invariants import ermakov_I0
from .model import CartesianState, SystemSpec


@dataclass
class RhoSolution:
    """``rho``, ``rho'`` and the reduced time ``T`` (zero at the first grid point)."""

    t: np.ndarray
    rho: np.ndarray
    rhodot: np.ndarray
    T: np.ndarray

    def at(self, i: int) -> tuple[float, float, float]:
        return float(self.rho[i]), float(self.rhodot[i]), float(self.T[i])


def solve_rho(
    omega: Optional[Expression],
    rho0: float,
    rhodot0: float,
    t_span: tuple[float, float],
    control: Control = Control(),
    sample_times: Optional[Sequence[float]] = None,
) -> RhoSolution:
    """Solve the auxiliary oscillator and accumulate ``T = int rho^-2 dt``.

    ``omega=None`` means ``omega = 0``.

    Raises:
        ValueError: ``rho0 == 0``.
        RhoZeroCrossing: ``rho`` changes sign inside ``t_span``; ``err.bracket``
            holds the times of the step that crossed.
    """
    if rho0 == 0.0:
        raise ValueError("rho0 must be non-zero")
    t0, t1 = map(float, t_span)

    def w2(t: float) -> float:
        if omega is None:
            return 0.0
        w = omega(t)
        return w * w

    def osc(t, q):
        return np.array([q[1], -w2(t) * q[0]])

    def crossed(a, b) -> bool:
        return (a[0] > 0) != (b[0] > 0)

    try:
        solve_ode(osc, t0, [rho0, rhodot0], t1, control, sample_times, crossed, on_crossing="raise")
    except _Crossing as exc:
        a, b = exc.bracket
        raise RhoZeroCrossing(
            f"rho changes sign in [{a:.6g}, {b:.6g}]; the map T = int rho^-2 dt is singular there",
            (a, b),
        ) from None

    def augmented(t, q):
        return np.array([q[1], -w2(t) * q[0], 1.0 / (q[0] * q[0])])

    res = solve_ode(augmented, t0, [rho0, rhodot0, 0.0], t1, control, sample_times)
    if res.truncated:
        raise ErmakovError(f"rho integration stopped early: {res.stop_reason}")
    q = np.array(res.states)
    return RhoSolution(np.array(res.times), q[:, 0], q[:, 1], q[:, 2])


def reduce_state(s: CartesianState, rho: float, rhodot: float, T: float) -> CartesianState:
    """Time-dependent frame -> autonomous frame."""
    if rho == 0.0:
        raise ValueError("rho must be non-zero")
    return CartesianState(
        T,
        s.x / rho,
        s.y / rho,
        rho * s.vx - rhodot * s.x,
        rho * s.vy - rhodot * s.y,
    )


def inverse_reduce(s: CartesianState, rho: float, rhodot: float, t: float) -> CartesianState:
    """Autonomous frame -> time-dependent frame; exact inverse of :func:`reduce_state`."""
    if rho == 0.0:
        raise ValueError("rho must be non-zero")
    return CartesianState(
        t,
        rho * s.x,
        rho * s.y,
        s.vx / rho + rhodot * s.x,
        s.vy / rho + rhodot * s.y,
    )


def reduce_trajectory(traj: Trajectory, rho: RhoSolution, atol: float = 1e-12) -> Trajectory:
    """Map every sample of ``traj`` into the autonomous frame.

    ``rho`` must be sampled at exactly the trajectory's times (solve it with
    ``sample_times=traj.times[1:]``).

    Raises:
        ValueError: the time grids do not line up, or ``rho`` vanishes on them.
    """
    times = traj.times
    if len(times) != len(rho.t) or not np.allclose(times, rho.t, rtol=0.0, atol=atol * max(1.0, float(np.max(np.abs(times))))):
        raise ValueError("trajectory and rho grids are not aligned; solve rho at the trajectory's sample times")
    if np.any(rho.rho == 0.0):
        raise RhoZeroCrossing("rho vanishes on the grid", (float(times[0]), float(times[-1])))
    samples = [reduce_state(s, *rho.at(i)) for i, s in enumerate(traj.samples)]
    return Trajectory(
        spec=traj.spec.without_omega(),
        samples=samples,
        method=traj.method,
        tolerance=traj.tolerance,
        step=traj.step,
        accepted=traj.accepted,
        rejected=traj.rejected,
        truncated=traj.truncated,
        stop_reason=traj.stop_reason,
    )


@dataclass
class ReductionResult:
    original: Trajectory
    rho: RhoSolution
    reduced: Trajectory
    direct: Trajectory
    two_path_max: float
    i0_frame_max: float


def reduce_and_compare(
    spec: SystemSpec,
    s0: CartesianState,
    t_end: float,
    rho0: float,
    rhodot0: float,
    control: Control = Control(),
) -> ReductionResult:
    """Run both paths and compare them.

    Path A integrates the time-dependent system and maps each sample.  Path B
    maps the initial state and integrates the autonomous system to the same
    reduced times.  Also reports the largest pointwise difference between
    ``I0`` evaluated in the two frames.

    Raises:
        RhoZeroCrossing: ``rho`` vanishes in ``[s0.time, t_end]``; checked
            before anything else is integrated.
    """
    solve_rho(spec.omega, rho0, rhodot0, (s0.time, t_end), control)
    original = integrate(spec, s0, t_end, control)
    if original.truncated:
        raise ErmakovError(f"time-dependent integration stopped early: {original.stop_reason}")
    rho = solve_rho(spec.omega, rho0, rhodot0, (s0.time, original.final.time), control, original.times[1:])
    reduced = reduce_trajectory(original, rho)
    auto = spec.without_omega()
    start = reduced.samples[0]
    direct = integrate(auto, start, float(rho.T[-1]), control, sample_times=rho.T[1:])
    if direct.truncated:
        raise ErmakovError(f"autonomous integration stopped early: {direct.stop_reason}")
    two_path = max(
        float(np.max(np.abs(a.as_array() - b.as_array()))) for a, b in zip(reduced.samples, direct.samples)
    )
    i0 = max(abs(ermakov_I0(spec, a) - ermakov_I0(auto, b)) for a, b in zip(original.samples, reduced.samples))
    return ReductionResult(original, rho, reduced, direct, two_path, i0)
