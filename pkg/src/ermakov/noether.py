"""Noether point symmetries of ``V = N(Y/X)/X^2`` from the flat-plane homothetic algebra.

The symmetry conditions are checked numerically on a grid of sample points:

* Case 2: ``B . grad V + 2 psi_B V + c1 = 0`` for a KV (``psi_B = 0``) or
  the HV (``psi_B = 1``); integral ``2 psi_B t H - B . qdot + c1 t``.
* Case 3: ``grad Phi . grad V + 2 psi V = c2 Phi + c3`` for a gradient KV/HV;
  integral ``2 psi H int(C) - C grad Phi . qdot + C' Phi - c3 int(C)`` with
  ``C'' = -c2 C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import potential_value
from .errors import ConditionFailedError, DomainError, ErmakovError, SingularStateError
from .invariants import hamiltonian
from .model import CartesianState, Conservative, SystemSpec
from .numdiff import derivative

Potential = Callable[[float, float], float]

DEFAULT_TOL = 1e-8
GRID_X = tuple(np.linspace(0.5, 2.0, 5))
GRID_Y = (-1.75, -0.95, -0.35, 0.55, 1.45)


def default_grid() -> list[tuple[float, float]]:
    """25 points in ``[0.5, 2] x [-2, 2]``; the Y values avoid 0 and common poles."""
    return [(float(x), float(y)) for x in GRID_X for y in GRID_Y]


@dataclass(frozen=True)
class LinearForm:
    """``const + cx X + cy Y``; every algebra component has this shape."""

    const: float = 0.0
    cx: float = 0.0
    cy: float = 0.0

    def __call__(self, X: float, Y: float) -> float:
        return self.const + self.cx * X + self.cy * Y


@dataclass(frozen=True)
class SymmetryVector:
    name: str
    components: tuple[LinearForm, LinearForm]
    psi: float
    gradient: bool
    phi: Optional[Callable[[float, float], float]] = None

    def __call__(self, X: float, Y: float) -> tuple[float, float]:
        return self.components[0](X, Y), self.components[1](X, Y)

    def gradient_mismatch(self, X: float, Y: float, h: float = 1e-3) -> float:
        """``max |d(phi)/dq^a - B^a|`` at ``(X, Y)`` by finite differences."""
        if not self.gradient:
            raise ValueError(f"{self.name} is not a gradient vector")
        gx = derivative(lambda q: self.phi(q, Y), X, h)
        gy = derivative(lambda q: self.phi(X, q), Y, h)
        bx, by = self(X, Y)
        return max(abs(gx - bx), abs(gy - by))


def gradient_kv(b1: float, b2: float) -> SymmetryVector:
    """The translation ``b1 d/dX + b2 d/dY`` with ``phi = b1 X + b2 Y``."""
    return SymmetryVector(
        f"grad-KV({b1:g},{b2:g})",
        (LinearForm(const=b1), LinearForm(const=b2)),
        0.0,
        True,
        lambda X, Y: b1 * X + b2 * Y,
    )


def homothetic_algebra() -> list[SymmetryVector]:
    """The four generators of the flat 2d homothetic algebra."""
    dx = gradient_kv(1.0, 0.0)
    dy = gradient_kv(0.0, 1.0)
    return [
        SymmetryVector("dX", dx.components, 0.0, True, dx.phi),
        SymmetryVector("dY", dy.components, 0.0, True, dy.phi),
        SymmetryVector("rotation", (LinearForm(cy=1.0), LinearForm(cx=-1.0)), 0.0, False, None),
        SymmetryVector(
            "HV",
            (LinearForm(cx=1.0), LinearForm(cy=1.0)),
            1.0,
            True,
            lambda X, Y: 0.5 * (X * X + Y * Y),
        ),
    ]


def potential_evaluator(spec: SystemSpec) -> Potential:
    if not isinstance(spec.form, Conservative):
        raise ValueError("a potential exists only for the conservative form")
    N = spec.form.N
    return lambda X, Y: potential_value(N, X, Y)


@dataclass
class ConditionResult:
    """Outcome of a symmetry-condition check.

    ``max_residual`` is scaled per point by ``max(1, |largest term|)`` so that
    points close to a pole of ``V`` are judged relative to the size of ``V``.
    """

    vector: str
    case: int
    passes: bool
    constants: dict[str, float]
    max_residual: float
    tolerance: float
    points_used: int


def _grad_v(V: Potential, X: float, Y: float, h: float) -> tuple[float, float]:
    vx = derivative(lambda q: V(q, Y), X, h * max(1.0, abs(X)))
    vy = derivative(lambda q: V(X, q), Y, h * max(1.0, abs(Y)))
    return vx, vy


def _sample(V: Potential, grid: Sequence[tuple[float, float]], h: float):
    pts = []
    for X, Y in grid:
        try:
            v = V(X, Y)
        except (DomainError, SingularStateError):
            continue
        if not math.isfinite(v):
            continue
        try:
            gx, gy = _grad_v(V, X, Y, h)
        except (DomainError, SingularStateError) as exc:
            raise ErmakovError(f"gradient evaluation failed at ({X}, {Y}): {exc}") from exc
        pts.append((X, Y, v, gx, gy))
    if len(pts) < 8:
        raise ValueError(f"need at least 8 non-singular grid points, got {len(pts)}")
    return pts


def check_case2(
    V: Potential,
    B: SymmetryVector,
    grid: Optional[Sequence[tuple[float, float]]] = None,
    tol: float = DEFAULT_TOL,
    h: float = 1e-3,
) -> ConditionResult:
    """Is ``B . grad V + 2 psi_B V`` constant (``= -c1``) over the grid?"""
    pts = _sample(V, grid or default_grid(), h)
    E, scale = [], []
    for X, Y, v, gx, gy in pts:
        bx, by = B(X, Y)
        lin = bx * gx + by * gy
        E.append(lin + 2.0 * B.psi * v)
        scale.append(max(1.0, abs(lin), abs(2.0 * B.psi * v)))
    E = np.array(E)
    mean = float(np.mean(E))
    resid = float(np.max(np.abs(E - mean) / np.array(scale)))
    return ConditionResult(B.name, 2, resid <= tol, {"c1": -mean}, resid, tol, len(pts))


def check_case3(
    V: Potential,
    S: SymmetryVector,
    grid: Optional[Sequence[tuple[float, float]]] = None,
    tol: float = DEFAULT_TOL,
    h: float = 1e-3,
) -> ConditionResult:
    """Least-squares fit of ``grad Phi . grad V + 2 psi V = c2 Phi + c3``.

    Pass/fail uses the largest pointwise residual, not the fit residual.

    Raises:
        ValueError: ``S`` is not a gradient vector, or ``Phi`` is constant on
            the grid (degenerate fit).
    """
    if not S.gradient:
        raise ValueError(f"Case 3 needs a gradient vector; {S.name} is not")
    pts = _sample(V, grid or default_grid(), h)
    lhs, phi, scale = [], [], []
    for X, Y, v, gx, gy in pts:
        bx, by = S(X, Y)
        lin = bx * gx + by * gy
        lhs.append(lin + 2.0 * S.psi * v)
        phi.append(S.phi(X, Y))
        scale.append(max(1.0, abs(lin), abs(2.0 * S.psi * v)))
    lhs, phi = np.array(lhs), np.array(phi)
    if np.ptp(phi) <= 1e-12 * max(1.0, float(np.max(np.abs(phi)))):
        raise ValueError(f"degenerate fit: Phi of {S.name} is constant on the grid")
    A = np.column_stack([phi, np.ones_like(phi)])
    (c2, c3), *_ = np.linalg.lstsq(A, lhs, rcond=None)
    resid = float(np.max(np.abs(lhs - (c2 * phi + c3)) / np.array(scale)))
    return ConditionResult(S.name, 3, resid <= tol, {"c2": float(c2), "c3": float(c3)}, resid, tol, len(pts))


# ---------------------------------------------------------------- integral builders


@dataclass(frozen=True)
class NoetherIntegral:
    """A first integral ``I(spec, state)`` produced from a passing condition."""

    name: str
    fn: Callable[[SystemSpec, CartesianState], float]

    def __call__(self, spec: SystemSpec, s: CartesianState) -> float:
        return self.fn(spec, s)


def build_case2_fi(B: SymmetryVector, c1: float) -> NoetherIntegral:
    """``I = 2 psi_B t H - B_a qdot^a + c1 t``; ``H`` is only evaluated for the HV."""

    def fi(spec: SystemSpec, s: CartesianState) -> float:
        bx, by = B(s.x, s.y)
        value = -(bx * s.vx + by * s.vy) + c1 * s.time
        if B.psi != 0.0:
            value += 2.0 * B.psi * s.time * hamiltonian(spec, s)
        return value

    return NoetherIntegral(f"case2[{B.name}]", fi)


@dataclass(frozen=True)
class TimeFactor:
    """``C(t)`` with ``C'' = -c2 C`` plus ``C'`` and a fixed antiderivative of ``C``."""

    C: Callable[[float], float]
    dC: Callable[[float], float]
    intC: Callable[[float], float]
    label: str


def time_factor(c2: float, branch: str) -> TimeFactor:
    """Select one independent solution of ``C'' = -c2 C``.

    ``c2 = 0``: ``"linear"`` (``C = t``).  ``c2 = k^2 > 0``: ``"cos"`` or
    ``"sin"``.  ``c2 = -k^2 < 0``: ``"exp+"`` or ``"exp-"``.

    Raises:
        ValueError: the branch does not belong to the sign of ``c2``, or gives
            ``C' = 0`` identically (``"constant"`` with ``c2 = 0``).
    """
    if c2 == 0.0:
        if branch == "linear":
            return TimeFactor(lambda t: t, lambda t: 1.0, lambda t: 0.5 * t * t, "t")
        if branch == "constant":
            raise ValueError("C = const has C' = 0 identically; a time-dependent C is required")
        raise ValueError(f"branch {branch!r} invalid for c2 = 0; use 'linear'")
    k = math.sqrt(abs(c2))
    if c2 > 0.0:
        if branch == "cos":
            return TimeFactor(lambda t: math.cos(k * t), lambda t: -k * math.sin(k * t), lambda t: math.sin(k * t) / k, f"cos({k:g}t)")
        if branch == "sin":
            return TimeFactor(lambda t: math.sin(k * t), lambda t: k * math.cos(k * t), lambda t: -math.cos(k * t) / k, f"sin({k:g}t)")
        raise ValueError(f"branch {branch!r} invalid for c2 > 0; use 'cos' or 'sin'")
    if branch == "exp+":
        return TimeFactor(lambda t: math.exp(k * t), lambda t: k * math.exp(k * t), lambda t: math.exp(k * t) / k, f"exp({k:g}t)")
    if branch == "exp-":
        return TimeFactor(lambda t: math.exp(-k * t), lambda t: -k * math.exp(-k * t), lambda t: -math.exp(-k * t) / k, f"exp(-{k:g}t)")
    raise ValueError(f"branch {branch!r} invalid for c2 < 0; use 'exp+' or 'exp-'")


def build_case3_fi(
    S: SymmetryVector, c2: float, c3: float, branch: Optional[str] = None, zero_tol: float = 1e-9
) -> NoetherIntegral:
    """``I = 2 psi H int(C) - C grad(Phi).qdot + C' Phi - c3 int(C)``.

    Fitted constants with ``|c| <= zero_tol`` are treated as exactly zero.
    ``branch`` defaults to ``"linear"``/``"cos"``/``"exp+"`` by the sign of ``c2``.
    """
    if not S.gradient:
        raise ValueError(f"Case 3 needs a gradient vector; {S.name} is not")
    c2 = 0.0 if abs(c2) <= zero_tol else c2
    c3 = 0.0 if abs(c3) <= zero_tol else c3
    if branch is None:
        branch = "linear" if c2 == 0.0 else ("cos" if c2 > 0 else "exp+")
    tf = time_factor(c2, branch)

    def fi(spec: SystemSpec, s: CartesianState) -> float:
        t = s.time
        bx, by = S(s.x, s.y)
        ic = tf.intC(t)
        value = -tf.C(t) * (bx * s.vx + by * s.vy) + tf.dC(t) * S.phi(s.x, s.y) - c3 * ic
        if S.psi != 0.0:
            value += 2.0 * S.psi * hamiltonian(spec, s) * ic
        return value

    return NoetherIntegral(f"case3[{S.name},{tf.label}]", fi)


# -------------------------------------------------------------------------- scanning


@dataclass
class ScanRow:
    vector: SymmetryVector
    case2: ConditionResult
    case3: Optional[ConditionResult]


def noether_scan(
    spec: SystemSpec,
    extra: Sequence[SymmetryVector] = (),
    grid: Optional[Sequence[tuple[float, float]]] = None,
    tol: float = DEFAULT_TOL,
) -> list[ScanRow]:
    """Check Cases 2 and 3 for every algebra vector (plus ``extra``) on ``spec``'s potential."""
    V = potential_evaluator(spec)
    rows = []
    for vec in list(homothetic_algebra()) + list(extra):
        c2 = check_case2(V, vec, grid, tol)
        c3 = check_case3(V, vec, grid, tol) if vec.gradient else None
        rows.append(ScanRow(vec, c2, c3))
    return rows


def require(result: ConditionResult) -> ConditionResult:
    if not result.passes:
        raise ConditionFailedError(
            f"Case-{result.case} condition fails for {result.vector} "
            f"(max residual {result.max_residual:.3g} > {result.tolerance:.3g})"
        )
    return result
