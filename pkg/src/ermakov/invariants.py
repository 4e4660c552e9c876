"""First integrals of the Ermakov system and their drift along trajectories.

The Ermakov integral ``I0`` is defined only up to an additive constant by its
indefinite integral.  For conservative specs we anchor it to
``(1 + u^2) N(u)``, which makes ``4 H I3 - I2^2 = 2 I0`` hold exactly; for the
other forms the integral runs from ``u_ref = 1``.  The classical Lewis
invariant is exposed separately and equals the anchored ``I0`` of
``N = u^-2/2`` minus ``1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as ex
from .dynamics import potential_value
from .errors import ConditionFailedError, NotConservativeError, SingularStateError
from .integrate import Trajectory
from .model import CartesianState, Conservative, GeneralFG, NormalizedFG, SystemSpec
from .numdiff import gradient

QUAD_TOL = 1e-13
U_REF = 1.0


def angular_momentum(s: CartesianState) -> float:
    return s.x * s.vy - s.y * s.vx


def _u(s: CartesianState) -> float:
    if s.x == 0.0:
        raise SingularStateError("u = y/x is undefined at x = 0")
    return s.y / s.x


@lru_cache(maxsize=64)
def _ermakov_integrand(F: ex.Expression, G: ex.Expression) -> ex.Expression:
    # u F(u) - u^-3 G(u)
    u = ex.variable("u")
    inv_u3 = ex.combine("^", u, ex.constant(-3.0, "u"))
    return ex.combine("-", ex.combine("*", u, F), ex.combine("*", inv_u3, G))


def ermakov_I0(spec: SystemSpec, s: CartesianState, u_ref: float = U_REF, quad_tol: float = QUAD_TOL) -> float:
    """The Ermakov first integral; valid in either frame (it does not involve omega).

    Conservative specs use the closed, anchored form
    ``(x vy - y vx)^2 / 2 + (1 + u^2) N(u)``; other forms integrate
    numerically from ``u_ref``.
    """
    L = angular_momentum(s)
    form = spec.form
    if isinstance(form, Conservative):
        u = _u(s)
        return 0.5 * L * L + (1.0 + u * u) * form.N(u)
    if isinstance(form, NormalizedFG):
        u = _u(s)
        return 0.5 * L * L + ex.quad_integral(_ermakov_integrand(form.F, form.G), u_ref, u, quad_tol)
    if isinstance(form, GeneralFG):
        u = _u(s)
        if s.y == 0.0:
            raise SingularStateError("v = x/y is undefined at y = 0")
        v = s.x / s.y
        return (
            0.5 * L * L
            + ex.quad_integral(form.f, u_ref, u, quad_tol)
            + ex.quad_integral(form.g, 1.0 / u_ref, v, quad_tol)
        )
    raise TypeError(f"unknown form {form!r}")


def lewis_invariant(s: CartesianState) -> float:
    """``(x vy - y vx)^2 / 2 + (x/y)^2 / 2``."""
    if s.y == 0.0:
        raise SingularStateError("Lewis invariant is singular at y = 0")
    L = angular_momentum(s)
    return 0.5 * L * L + 0.5 * (s.x / s.y) ** 2


def _require_conservative(spec: SystemSpec) -> Conservative:
    if not isinstance(spec.form, Conservative):
        raise NotConservativeError(f"not conservative: {spec.form.tag} form has no Hamiltonian")
    if not spec.autonomous:
        raise NotConservativeError("time-dependent spec (omega present) has no conserved Hamiltonian")
    return spec.form


def hamiltonian(spec: SystemSpec, s: CartesianState) -> float:
    """``(vx^2 + vy^2)/2 + N(y/x)/x^2`` for conservative autonomous specs.

    Raises:
        NotConservativeError: any other spec.
    """
    form = _require_conservative(spec)
    return 0.5 * (s.vx * s.vx + s.vy * s.vy) + potential_value(form.N, s.x, s.y)


def fi_I2(spec: SystemSpec, s: CartesianState) -> float:
    """``2 T H - (x vx + y vy)`` with ``T = s.time``."""
    H = hamiltonian(spec, s)
    return 2.0 * s.time * H - (s.x * s.vx + s.y * s.vy)


def fi_I3(spec: SystemSpec, s: CartesianState) -> float:
    T = s.time
    H = hamiltonian(spec, s)
    return T * T * H - T * (s.x * s.vx + s.y * s.vy) + 0.5 * (s.x * s.x + s.y * s.y)


def check_I3_relation(H: float, I0: float, I2: float, I3: float) -> float:
    """Residual ``|I3 - (I2^2 + 2 I0) / (4 H)|``; ``I0`` must be the anchored one.

    Raises:
        ZeroDivisionError: ``H == 0``, where the relation is undefined.
    """
    if H == 0.0:
        raise ZeroDivisionError("I3 = (I2^2 + 2 I0)/(4H) is undefined for H = 0")
    return abs(I3 - (I2 * I2 + 2.0 * I0) / (4.0 * H))


@lru_cache(maxsize=64)
def _gradient_kv_check(spec: SystemSpec, b1: float, b2: float):
    from .noether import check_case2, gradient_kv, potential_evaluator

    return check_case2(potential_evaluator(spec), gradient_kv(b1, b2))


def _assert_kv(spec: SystemSpec, b1: float, b2: float) -> None:
    _require_conservative(spec)
    result = _gradient_kv_check(spec, float(b1), float(b2))
    if not result.passes:
        raise ConditionFailedError(
            f"Case-2 condition b.grad(V) + c1 = 0 fails for b=({b1}, {b2}) "
            f"(max residual {result.max_residual:.3g})"
        )


def fi_gradientKV(b1: float, b2: float, spec: SystemSpec, s: CartesianState) -> tuple[float, float]:
    """``(I21, I31)`` for the translation ``b1 d/dX + b2 d/dY``.

    Raises:
        ConditionFailedError: the Killing-vector condition
            ``b1 V_X + b2 V_Y = const`` fails for the spec's potential.
    """
    _assert_kv(spec, b1, b2)
    T = s.time
    I21 = b1 * s.vx + b2 * s.vy
    I31 = b1 * (-T * s.vx + s.x) + b2 * (-T * s.vy + s.y)
    return I21, I31


# ---------------------------------------------------------------------- drift report

STANDARD_NAMES = ("H", "I0", "I2", "I3")


def evaluator(name: str, spec: SystemSpec, gradient_kv: Optional[tuple[float, float]] = None):
    """Callable ``state -> value`` for an invariant name.

    Names: ``H``, ``I0``, ``I2``, ``I3``, ``L`` (angular momentum), ``Lewis``,
    ``I21``, ``I31`` (the latter two need ``gradient_kv=(b1, b2)``).

    Raises:
        NotConservativeError / ConditionFailedError / ValueError: the invariant
            is undefined for ``spec``.
    """
    if name in ("H", "I2", "I3"):
        _require_conservative(spec)
        fn = {"H": hamiltonian, "I2": fi_I2, "I3": fi_I3}[name]
        return lambda s: fn(spec, s)
    if name == "I0":
        return lambda s: ermakov_I0(spec, s)
    if name == "L":
        return angular_momentum
    if name == "Lewis":
        return lewis_invariant
    if name in ("I21", "I31"):
        if gradient_kv is None:
            raise ValueError(f"{name} needs gradient_kv=(b1, b2)")
        b1, b2 = gradient_kv
        idx = 0 if name == "I21" else 1
        _assert_kv(spec, b1, b2)
        return lambda s: fi_gradientKV(b1, b2, spec, s)[idx]
    raise ValueError(f"unknown invariant {name!r}")


@dataclass
class InvariantSeries:
    name: str
    values: np.ndarray
    reference: float
    max_abs_drift: float
    max_rel_drift: float
    passes: bool


@dataclass
class InvariantReport:
    tolerance: float
    series: dict[str, InvariantSeries] = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return all(s.passes for s in self.series.values())

    def __getitem__(self, name: str) -> InvariantSeries:
        return self.series[name]


def drift_of(name: str, values: Sequence[float], tol: float) -> InvariantSeries:
    v = np.asarray(values, dtype=float)
    ref = float(v[0])
    abs_drift = float(np.max(np.abs(v - ref)))
    rel_drift = abs_drift / max(abs(ref), 1.0)
    return InvariantSeries(name, v, ref, abs_drift, rel_drift, rel_drift <= tol)


def drift_report(
    traj: Trajectory,
    which: Sequence[str],
    tol: float,
    gradient_kv: Optional[tuple[float, float]] = None,
) -> InvariantReport:
    """Evaluate each named invariant along ``traj`` and measure its drift.

    Relative drift is ``max |I - I(first sample)| / max(|I(first sample)|, 1)``.
    """
    if not which:
        raise ValueError("no invariants requested")
    report = InvariantReport(tol)
    for name in which:
        fn = evaluator(name, traj.spec, gradient_kv)
        report.series[name] = drift_of(name, [fn(s) for s in traj.samples], tol)
    return report


def fi_jacobian(
    spec: SystemSpec,
    s: CartesianState,
    names: Sequence[str] = ("H", "I0", "I2"),
    rel_step: float = 1e-4,
) -> np.ndarray:
    """Finite-difference gradients of the named integrals w.r.t. ``(x, y, vx, vy)``."""
    rows = []
    for name in names:
        fn = evaluator(name, spec)

        def f(q: np.ndarray, fn: Callable = fn) -> float:
            return fn(CartesianState.from_array(s.time, q))

        rows.append(gradient(f, s.as_array(), rel_step))
    return np.array(rows)


def independence_ratio(spec: SystemSpec, s: CartesianState, names: Sequence[str] = ("H", "I0", "I2")) -> float:
    """``sigma_min / sigma_max`` of :func:`fi_jacobian`; well above zero means independent."""
    sv = np.linalg.svd(fi_jacobian(spec, s, names), compute_uv=False)
    return float(sv[-1] / sv[0])
