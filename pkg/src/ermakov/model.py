"""System specifications, phase-space states and exact conversions between forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import expr as ex
from .expr import Expression


def _in_var(e: Expression, name: str) -> Expression:
    """Rename the free variable of ``e`` to ``name``."""
    if e.var == name:
        return e
    return ex.compose(e, ex.variable(name))


def _as_expr(e: Union[str, Expression], name: str) -> Expression:
    if isinstance(e, Expression):
        return _in_var(e, name)
    return ex.parse_expression(e, name)


def normalize_fg(f: Expression, g: Expression) -> tuple[Expression, Expression]:
    """Return ``(F, G)`` with ``F(u) = f(u)/u`` and ``G(u) = u g(1/u)``.

    ``f`` is read in ``u = y/x`` and ``g`` in ``v = x/y``.  Evaluating the
    results at ``u = 0`` is a domain error of the returned expressions.
    """
    u = ex.variable("u")
    f = _in_var(f, "u")
    F = ex.combine("/", f, u)
    g_of_inv_u = ex.compose(g, ex.combine("/", ex.constant(1.0, "u"), u))
    G = ex.combine("*", u, g_of_inv_u)
    return F, G


def conservative_to_FG(N: Expression) -> tuple[Expression, Expression]:
    """``F = 2N + u N'`` and ``G = -u^3 N'`` for the potential ``V = N(y/x)/x^2``."""
    N = _in_var(N, "u")
    dN = ex.differentiate(N)
    u = ex.variable("u")
    two = ex.constant(2.0, "u")
    F = ex.combine("+", ex.combine("*", two, N), ex.combine("*", u, dN))
    u3 = ex.combine("^", u, ex.constant(3.0, "u"))
    G = ex.combine("*", ex.combine("*", ex.constant(-1.0, "u"), u3), dN)
    return F, G


@dataclass(frozen=True)
class GeneralFG:
    """``x'' = f(y/x)/(x^2 y)``, ``y'' = g(x/y)/(x y^2)``; ``f`` in ``u``, ``g`` in ``v``."""

    f: Expression
    g: Expression
    F: Expression = field(init=False, repr=False, compare=False)
    G: Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        F, G = normalize_fg(self.f, self.g)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    tag = "general"


@dataclass(frozen=True)
class NormalizedFG:
    """``x'' = F(u)/x^3``, ``y'' = G(u)/y^3`` with ``u = y/x``."""

    F: Expression
    G: Expression

    tag = "normalized"


@dataclass(frozen=True)
class Conservative:
    """Potential ``V = N(y/x)/x^2``."""

    N: Expression
    dN: Expression = field(init=False, repr=False, compare=False)
    F: Expression = field(init=False, repr=False, compare=False)
    G: Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dN", ex.differentiate(self.N))
        F, G = conservative_to_FG(self.N)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    tag = "conservative"


Form = Union[GeneralFG, NormalizedFG, Conservative]


@dataclass(frozen=True)
class SystemSpec:
    """Which form of the Ermakov system to run, plus an optional frequency ``omega(t)``.

    ``omega=None`` is the autonomous frame (time is then the reduced time T).
    """

    form: Form
    omega: Optional[Expression] = None

    @classmethod
    def general(cls, f, g, omega=None) -> "SystemSpec":
        return cls(GeneralFG(_as_expr(f, "u"), _as_expr(g, "v")), _omega(omega))

    @classmethod
    def normalized(cls, F, G, omega=None) -> "SystemSpec":
        return cls(NormalizedFG(_as_expr(F, "u"), _as_expr(G, "u")), _omega(omega))

    @classmethod
    def conservative(cls, N, omega=None) -> "SystemSpec":
        return cls(Conservative(_as_expr(N, "u")), _omega(omega))

    @property
    def autonomous(self) -> bool:
        return self.omega is None

    @property
    def is_conservative(self) -> bool:
        return isinstance(self.form, Conservative)

    def without_omega(self) -> "SystemSpec":
        return SystemSpec(self.form, None)

    def with_omega(self, omega) -> "SystemSpec":
        return SystemSpec(self.form, _omega(omega))

    def FG(self) -> tuple[Expression, Expression]:
        """The normalized pair ``(F, G)`` equivalent to this spec's form."""
        return self.form.F, self.form.G


def _omega(omega) -> Optional[Expression]:
    if omega is None:
        return None
    return _as_expr(omega, "t")


@dataclass(frozen=True)
class CartesianState:
    time: float
    x: float
    y: float
    vx: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])

    @classmethod
    def from_array(cls, time: float, q) -> "CartesianState":
        return cls(float(time), float(q[0]), float(q[1]), float(q[2]), float(q[3]))


@dataclass(frozen=True)
class PolarState:
    """Polar point with generalized momenta ``p_r = r'`` and ``p_theta = r^2 theta'``."""

    time: float
    r: float
    theta: float
    p_r: float
    p_theta: float


def cart_to_polar(s: CartesianState) -> PolarState:
    """Cartesian to polar; ``theta`` in ``(-pi, pi]``.

    Raises:
        ValueError: ``s`` is at the origin.
    """
    r = math.hypot(s.x, s.y)
    if r == 0.0:
        raise ValueError("polar coordinates undefined at the origin")
    theta = math.atan2(s.y, s.x)
    if theta == -math.pi:  # y = -0.0 on the negative axis
        theta = math.pi
    p_r = (s.x * s.vx + s.y * s.vy) / r
    p_theta = s.x * s.vy - s.y * s.vx
    return PolarState(s.time, r, theta, p_r, p_theta)


def polar_to_cart(p: PolarState) -> CartesianState:
    if not p.r > 0.0:
        raise ValueError(f"r must be positive, got {p.r!r}")
    c, s = math.cos(p.theta), math.sin(p.theta)
    omega = p.p_theta / p.r
    return CartesianState(
        p.time,
        p.r * c,
        p.r * s,
        p.p_r * c - omega * s,
        p.p_r * s + omega * c,
    )
