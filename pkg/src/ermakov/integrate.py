"""Trajectories of the first-order system ``(x, y, vx, vy)``.

Two methods are available: classical fixed-step RK4 and the embedded
Dormand-Prince 5(4) pair with a PI step-size controller.  Output samples are
hit exactly by clamping the step, never by interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import accel_xy, required_nonzero
from .errors import DomainError, IntegrationError, MaxStepsExceeded, SingularStateError, StepSizeUnderflow
from .model import CartesianState, SystemSpec

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# Difference between the 5th and embedded 4th order weights.
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class Control:
    """Integrator settings.

    ``method`` is ``"dp54"`` (adaptive; uses ``rtol``/``atol``) or ``"rk4"``
    (fixed; uses ``step``).  ``sample_interval`` sets the output grid; when it
    is ``None`` every accepted step is recorded.
    """

    method: str = "dp54"
    rtol: float = 1e-10
    atol: float = 1e-10
    step: Optional[float] = None
    sample_interval: Optional[float] = None
    max_steps: int = 2_000_000

    def __post_init__(self) -> None:
        if self.method not in ("dp54", "rk4"):
            raise ValueError(f"unknown method {self.method!r}; expected 'dp54' or 'rk4'")
        if self.method == "rk4" and not (self.step and self.step > 0):
            raise ValueError("rk4 needs a positive step")
        if self.method == "dp54" and not (self.rtol > 0 and self.atol >= 0):
            raise ValueError("dp54 needs rtol > 0 and atol >= 0")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")

    @classmethod
    def adaptive(cls, tol: float, sample_interval: Optional[float] = None) -> "Control":
        return cls("dp54", tol, tol, None, sample_interval)

    @classmethod
    def fixed(cls, step: float, sample_interval: Optional[float] = None) -> "Control":
        return cls("rk4", step=step, sample_interval=sample_interval)


@dataclass
class Trajectory:
    """Time-ordered samples of a run plus solver metadata."""

    spec: SystemSpec
    samples: list[CartesianState]
    method: str
    tolerance: Optional[float] = None
    step: Optional[float] = None
    accepted: int = 0
    rejected: int = 0
    truncated: bool = False
    stop_reason: Optional[str] = None

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    def array(self) -> np.ndarray:
        """Samples as an ``(n, 5)`` array of ``time, x, y, vx, vy``."""
        return np.array([[s.time, s.x, s.y, s.vx, s.vy] for s in self.samples])

    @property
    def final(self) -> CartesianState:
        return self.samples[-1]


class _Crossing(Exception):
    def __init__(self, t0: float, t1: float):
        self.bracket = (t0, t1)


@dataclass
class _Result:
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    truncated: bool = False
    stop_reason: Optional[str] = None


def _targets(t0: float, t_end: float, interval: Optional[float], sample_times: Optional[Sequence[float]]):
    if sample_times is not None:
        ts = sorted(float(t) for t in sample_times if t > t0)
        if not ts or ts[-1] > t_end:
            raise ValueError("sample_times must lie in (t0, t_end]")
        if ts[-1] < t_end:
            ts.append(t_end)
        return ts
    if interval is None:
        return None
    n = int(math.floor((t_end - t0) / interval * (1 + 1e-12)))
    ts = [t0 + k * interval for k in range(1, n + 1)]
    if ts and abs(ts[-1] - t_end) <= 1e-9 * interval:
        ts[-1] = t_end
    if not ts or ts[-1] < t_end:
        ts.append(t_end)
    return ts


def _rms(v: np.ndarray) -> float:
    return math.sqrt(float(np.dot(v, v)) / v.size)


def solve_ode(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    control: Control,
    sample_times: Optional[Sequence[float]] = None,
    crossing: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None,
    on_crossing: str = "truncate",
) -> _Result:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end``.

    ``crossing(y_old, y_new)`` flags a step that crosses a forbidden surface.
    With ``on_crossing="truncate"`` such steps are rejected and shrunk until the
    step underflows, then the run stops with ``truncated=True``; with
    ``"raise"`` the first crossing raises ``_Crossing`` with the time bracket.
    A ``SingularStateError``/``DomainError`` inside a stage is treated like a
    crossing.
    """
    if not t_end > t0:
        raise ValueError(f"t_end ({t_end!r}) must exceed the start time ({t0!r})")
    y = np.array(y0, dtype=float)
    targets = _targets(t0, t_end, control.sample_interval, sample_times)
    res = _Result(times=[t0], states=[y.copy()])
    if control.method == "rk4":
        _run_rk4(fun, t0, y, t_end, control, targets, crossing, on_crossing, res)
    else:
        _run_dp54(fun, t0, y, t_end, control, targets, crossing, on_crossing, res)
    return res


def _rk4_step(fun, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fun(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run_rk4(fun, t0, y, t_end, control, targets, crossing, on_crossing, res: _Result) -> None:
    h = control.step
    n = int(math.floor((t_end - t0) / h * (1 + 1e-12)))
    grid = {t0 + k * h for k in range(1, n + 1)}
    grid.add(t_end)
    if targets is not None:
        grid.update(targets)
    grid = sorted(g for g in grid if t0 < g <= t_end)
    keep = None if targets is None else set(targets)
    t = t0
    for tn in grid:
        if res.accepted >= control.max_steps:
            raise MaxStepsExceeded(f"exceeded {control.max_steps} steps at t={t!r}", (t, y.copy()))
        try:
            yn = _rk4_step(fun, t, y, tn - t)
        except (SingularStateError, DomainError) as exc:
            res.truncated, res.stop_reason = True, f"singular state near t={t!r}: {exc}"
            return
        if crossing is not None and crossing(y, yn):
            if on_crossing == "raise":
                raise _Crossing(t, tn)
            res.truncated, res.stop_reason = True, f"coordinate singularity crossed in ({t!r}, {tn!r})"
            return
        t, y = tn, yn
        res.accepted += 1
        if keep is None or tn in keep:
            res.times.append(t)
            res.states.append(y.copy())


def _initial_step(fun, t0, y0, f0, rtol, atol, t_end) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    try:
        f1 = fun(t0 + h0, y0 + h0 * f0)
        d2 = _rms((f1 - f0) / scale) / h0
    except (SingularStateError, DomainError):
        return h0 * 1e-3
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t0)


def _run_dp54(fun, t0, y, t_end, control, targets, crossing, on_crossing, res: _Result) -> None:
    rtol, atol = control.rtol, control.atol
    t = t0
    f = fun(t, y)
    h = _initial_step(fun, t0, y, f, rtol, atol, t_end)
    err_prev = 1e-4
    ti = 0
    target = targets[0] if targets is not None else t_end
    rejected_last = False
    k = [None] * 7
    while True:
        if res.accepted + res.rejected >= control.max_steps:
            raise MaxStepsExceeded(f"exceeded {control.max_steps} steps at t={t!r}", (t, y.copy()))
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            res.truncated = True
            res.stop_reason = f"step size underflow at t={t!r} (h={h:.3g})"
            return
        h_try = h
        landing = False
        if t + h_try >= target - h_min:
            h_try = target - t
            landing = True
        try:
            k[0] = f
            for i in range(1, 7):
                dy = sum(a * kj for a, kj in zip(_A[i], k[:i]) if a != 0.0)
                k[i] = fun(t + _C[i] * h_try, y + h_try * dy)
            y_new = y + h_try * sum(b * kj for b, kj in zip(_B, k[:6]) if b != 0.0)
            f_new = k[6]
            err_vec = h_try * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(err_vec / scale)
            bad = not math.isfinite(err)
        except (SingularStateError, DomainError):
            bad, err = True, math.inf
        if not bad and crossing is not None and crossing(y, y_new):
            if on_crossing == "raise":
                raise _Crossing(t, t + h_try)
            bad = True
        if bad:
            res.rejected += 1
            h = h_try * 0.25
            rejected_last = True
            continue
        if err <= 1.0:
            t = target if landing else t + h_try
            y, f = y_new, f_new
            res.accepted += 1
            if targets is None:
                res.times.append(t)
                res.states.append(y.copy())
            elif landing:
                res.times.append(t)
                res.states.append(y.copy())
            if landing:
                if targets is None or ti == len(targets) - 1:
                    return
                ti += 1
                target = targets[ti]
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err ** (-_ALPHA) * err_prev**_BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_prev = max(err, 1e-4)
            rejected_last = False
            # A step shortened only to land on a sample does not shrink the next one.
            h = max(h, h_try) * factor if landing else h_try * factor
        else:
            res.rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err ** (-0.2))
            h = h_try * factor
            rejected_last = True


# ------------------------------------------------------------------- spec wrappers


def _rhs(spec: SystemSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    def fun(t: float, q: np.ndarray) -> np.ndarray:
        ax, ay = accel_xy(spec, t, q[0], q[1])
        return np.array([q[2], q[3], ax, ay])

    return fun


def _crossing_for(spec: SystemSpec):
    need_x, need_y = required_nonzero(spec)
    if not (need_x or need_y):
        return None

    def crossed(a: np.ndarray, b: np.ndarray) -> bool:
        if need_x and (a[0] > 0) != (b[0] > 0):
            return True
        if need_y and (a[1] > 0) != (b[1] > 0):
            return True
        return False

    return crossed


def step_rk4(spec: SystemSpec, s: CartesianState, h: float) -> CartesianState:
    """One classical RK4 step of size ``h`` from ``s``."""
    if h == 0:
        raise ValueError("step size h must be non-zero")
    q = _rk4_step(_rhs(spec), s.time, s.as_array(), h)
    return CartesianState.from_array(s.time + h, q)


def integrate(
    spec: SystemSpec,
    s0: CartesianState,
    t_end: float,
    control: Control = Control(),
    sample_times: Optional[Sequence[float]] = None,
    on_singularity: str = "truncate",
) -> Trajectory:
    """Integrate ``spec`` from ``s0`` up to ``t_end``.

    Approaching ``x = 0`` or ``y = 0`` (where the form divides by them) the run
    stops and the trajectory comes back with ``truncated=True`` and a
    ``stop_reason``.  Pass ``on_singularity="raise"`` to get a
    :class:`StepSizeUnderflow` carrying the last good state instead.

    Raises:
        ValueError: ``t_end <= s0.time`` or a singular initial state.
        MaxStepsExceeded: ``control.max_steps`` exhausted.
    """
    if not t_end > s0.time:
        raise ValueError(f"t_end ({t_end!r}) must exceed the initial time ({s0.time!r})")
    need_x, need_y = required_nonzero(spec)
    if (need_x and s0.x == 0.0) or (need_y and s0.y == 0.0):
        raise SingularStateError("initial state lies on a coordinate singularity")
    try:
        res = solve_ode(_rhs(spec), s0.time, s0.as_array(), t_end, control, sample_times, _crossing_for(spec))
    except MaxStepsExceeded as exc:
        t, q = exc.last_state
        raise MaxStepsExceeded(str(exc), CartesianState.from_array(t, q)) from None
    samples = [CartesianState.from_array(t, q) for t, q in zip(res.times, res.states)]
    if res.truncated and on_singularity == "raise":
        raise StepSizeUnderflow(res.stop_reason or "integration stopped", samples[-1])
    return Trajectory(
        spec=spec,
        samples=samples,
        method=control.method,
        tolerance=control.rtol if control.method == "dp54" else None,
        step=control.step,
        accepted=res.accepted,
        rejected=res.rejected,
        truncated=res.truncated,
        stop_reason=res.stop_reason,
    )


__all__ = [
    "Control",
    "IntegrationError",
    "Trajectory",
    "integrate",
    "solve_ode",
    "step_rk4",
]
