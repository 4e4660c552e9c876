"""Right-hand sides (accelerations) of every form of the Ermakov system."""

from __future__ import annotations

from .errors import SingularStateError
from .expr import Expression
from .model import CartesianState, Conservative, GeneralFG, NormalizedFG, SystemSpec
from .numdiff import derivative


def required_nonzero(spec: SystemSpec) -> tuple[bool, bool]:
    """Which coordinates the right-hand side divides by, as ``(need_x, need_y)``.

    Terms whose coefficient function is the literal constant zero are dropped,
    so e.g. ``F = 0, G = 1`` never divides by ``x``.
    """
    form = spec.form
    if isinstance(form, GeneralFG):
        fx, gy = not form.f.is_zero(), not form.g.is_zero()
        return fx or gy, fx or gy
    if isinstance(form, NormalizedFG):
        nonconst = not (form.F.is_constant and form.G.is_constant)
        return (not form.F.is_zero()) or nonconst, not form.G.is_zero()
    if isinstance(form, Conservative):
        return not form.N.is_zero(), False
    raise TypeError(f"unknown form {form!r}")


def _omega_sq(spec: SystemSpec, t: float) -> float:
    if spec.omega is None:
        return 0.0
    w = spec.omega(t)
    return w * w


def acceleration(spec: SystemSpec, s: CartesianState) -> tuple[float, float]:
    """``(x'', y'')`` at state ``s`` for the spec's form.

    Raises:
        SingularStateError: ``x`` or ``y`` is zero where the form divides by it.
        DomainError: a user expression is evaluated outside its domain.
    """
    return accel_xy(spec, s.time, s.x, s.y)


def accel_xy(spec: SystemSpec, t: float, x: float, y: float) -> tuple[float, float]:
    w2 = _omega_sq(spec, t)
    ax = -w2 * x
    ay = -w2 * y
    form = spec.form
    need_x, need_y = required_nonzero(spec)
    if need_x and x == 0.0:
        raise SingularStateError(f"x = 0 is singular for the {form.tag} form (t={t!r})")
    if need_y and y == 0.0:
        raise SingularStateError(f"y = 0 is singular for the {form.tag} form (t={t!r})")

    if isinstance(form, GeneralFG):
        if not form.f.is_zero():
            ax += form.f(y / x) / (x * x * y)
        if not form.g.is_zero():
            ay += form.g(x / y) / (x * y * y)
    elif isinstance(form, NormalizedFG):
        if form.F.is_constant and form.G.is_constant:
            u = 0.0
        else:
            u = y / x
        if not form.F.is_zero():
            ax += form.F(u) / x**3
        if not form.G.is_zero():
            ay += form.G(u) / y**3
    elif isinstance(form, Conservative):
        if not form.N.is_zero():
            u = y / x
            n = form.N(u)
            dn = form.dN(u)
            x3 = x**3
            ax += (2.0 * n + u * dn) / x3
            ay -= dn / x3
    return ax, ay


def potential_value(N: Expression, x: float, y: float) -> float:
    """``V = N(y/x) / x^2``.

    Raises:
        SingularStateError: ``x == 0``.
    """
    if x == 0.0:
        raise SingularStateError("potential N(y/x)/x^2 is singular at x = 0")
    return N(y / x) / (x * x)


def force_curl(spec: SystemSpec, x: float, y: float, t: float = 0.0, h: float = 1e-4) -> float:
    """``d(a_y)/dx - d(a_x)/dy`` by Richardson finite differences.

    Zero (to round-off) for every conservative force field; used to confirm
    that a given ``F, G`` pair admits no potential.
    """
    day_dx = derivative(lambda q: accel_xy(spec, t, q, y)[1], x, h)
    dax_dy = derivative(lambda q: accel_xy(spec, t, x, q)[0], y, h)
    return day_dx - dax_dy
