"""Single-variable real expressions: parse, print, evaluate, differentiate, integrate.

Grammar (``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" exponent)?
    exponent := ("-" | "+") exponent | power
    atom   := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"

``^`` is right associative, so ``2^3^2 == 2^(3^2)`` and ``-u^2 == -(u^2)``.
Implicit multiplication is not accepted.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

from .errors import DomainError, ExprSyntaxError, QuadratureError, UnknownIdentifierError

# --------------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]


def _atanh(x: float) -> float:
    return math.atanh(x)


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "atan": math.atan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
    "atanh": _atanh,
}


def _check_domain(func: str, x: float, node: Node) -> None:
    if func == "log" and x <= 0.0:
        raise DomainError(f"log of non-positive value {x!r}", node)
    if func == "sqrt" and x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}", node)
    if func == "atanh" and abs(x) >= 1.0:
        raise DomainError(f"atanh argument {x!r} outside (-1, 1)", node)


# ------------------------------------------------------------------------ evaluation


def _real_pow(a: float, b: float, node: Node) -> float:
    if a < 0.0 and b != math.floor(b):
        raise DomainError(f"negative base {a!r} raised to non-integer power {b!r}", node)
    if a == 0.0 and b < 0.0:
        raise DomainError("zero raised to a negative power", node)
    try:
        return a**b
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(f"power {a!r}^{b!r} failed: {exc}", node) from exc


def _compile(node: Node, var: str) -> Callable[[float], float]:
    if isinstance(node, Const):
        c = node.value
        return lambda x: c
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        f = _compile(node.arg, var)
        return lambda x: -f(x)
    if isinstance(node, Call):
        f = _compile(node.arg, var)
        fn = FUNCTIONS[node.func]
        name = node.func

        def call(x: float) -> float:
            a = f(x)
            _check_domain(name, a, node)
            try:
                return fn(a)
            except (OverflowError, ValueError) as exc:
                raise DomainError(f"{name}({a!r}) failed: {exc}", node) from exc

        return call
    if isinstance(node, BinOp):
        fl = _compile(node.left, var)
        fr = _compile(node.right, var)
        op = node.op
        if op == "+":
            return lambda x: fl(x) + fr(x)
        if op == "-":
            return lambda x: fl(x) - fr(x)
        if op == "*":
            return lambda x: fl(x) * fr(x)
        if op == "/":

            def div(x: float) -> float:
                d = fr(x)
                if d == 0.0:
                    raise DomainError("division by zero", node)
                return fl(x) / d

            return div
        if op == "^":
            return lambda x: _real_pow(fl(x), fr(x), node)
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class Expression:
    """Immutable parsed expression in one free variable ``var``."""

    root: Node
    var: str
    _fn: Callable[[float], float] = field(init=False, repr=False, compare=False, hash=False)
    _const: bool = field(init=False, repr=False, compare=False, hash=False)
    _zero: bool = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fn", _compile(self.root, self.var))
        const = _is_constant(self.root)
        zero = False
        if const:
            try:
                zero = self._fn(0.0) == 0.0
            except DomainError:
                pass
        object.__setattr__(self, "_const", const)
        object.__setattr__(self, "_zero", zero)

    def __call__(self, value: float) -> float:
        return evaluate(self, value)

    def __str__(self) -> str:
        return to_string(self)

    @property
    def is_constant(self) -> bool:
        """True when no free variable occurs in the expression."""
        return self._const

    def is_zero(self) -> bool:
        """True when the expression is a literal constant equal to zero."""
        return self._zero


def _is_constant(node: Node) -> bool:
    if isinstance(node, Const):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, (Neg, Call)):
        return _is_constant(node.arg)
    return _is_constant(node.left) and _is_constant(node.right)


def evaluate(e: Expression, value: float) -> float:
    """Evaluate ``e`` at ``value``.

    Raises:
        DomainError: the evaluation left the real domain (pole, log/sqrt of an
            invalid argument, overflow); ``err.node`` is the offending node.
    """
    r = e._fn(float(value))
    if not math.isfinite(r):
        raise DomainError(f"non-finite result {r!r} at {e.var}={value!r}", e.root)
    return r


# --------------------------------------------------------------------------- parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad, src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, var: str):
        self.src = src
        self.var = var
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: tuple[str, str, int]) -> ExprSyntaxError:
        if tok[0] == "end":
            return ExprSyntaxError(f"{message}: unexpected end of input", tok[2], self.src)
        return ExprSyntaxError(f"{message}: unexpected {tok[1]!r}", tok[2], self.src)

    def expect(self, value: str) -> None:
        tok = self.advance()
        if tok[0] != "op" or tok[1] != value:
            raise self.error(f"expected {value!r}", tok)

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error("trailing input", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.advance()
            arg = self.unary()
            return Neg(arg) if tok[1] == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.exponent())
        return base

    def exponent(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.advance()
            arg = self.exponent()
            return Neg(arg) if tok[1] == "-" else arg
        return self.power()

    def atom(self) -> Node:
        tok = self.advance()
        kind, text, pos = tok
        if kind == "num":
            return Const(float(text))
        if kind == "id":
            if text == self.var:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.src)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, variable, function or '('", tok)


def parse_expression(src: str, var_name: str) -> Expression:
    """Parse ``src`` as an expression in the single free variable ``var_name``.

    Raises:
        ExprSyntaxError: malformed text; the message carries the position.
        UnknownIdentifierError: an identifier other than ``var_name`` or a
            supported function name.
    """
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0, src if isinstance(src, str) else "")
    if var_name in FUNCTIONS:
        raise ValueError(f"variable name {var_name!r} collides with a function name")
    return Expression(_Parser(src, var_name).parse(), var_name)


# -------------------------------------------------------------------------- printer

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[node.op]
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Const) and math.copysign(1.0, node.value) < 0:
        return _PREC_NEG
    return _PREC_ATOM


def _fmt_const(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _str(node: Node) -> str:
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_str(node.arg)})"
    if isinstance(node, Neg):
        inner = _str(node.arg)
        if _prec(node.arg) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    p = _prec(node)
    left, right = _str(node.left), _str(node.right)
    if node.op == "^":
        if _prec(node.left) <= _PREC_POW:
            left = f"({left})"
        if _prec(node.right) < _PREC_POW:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def to_string(e: Expression) -> str:
    """Render ``e`` as text that :func:`parse_expression` reads back."""
    return _str(e.root)


# ------------------------------------------------------------- folding constructors


def _fold(node: Node) -> Node:
    """Replace an all-literal node by its value when that value is finite."""
    if isinstance(node, Const) or not _is_constant(node):
        return node
    try:
        v = _compile(node, "")(0.0)
    except DomainError:
        return node
    if not math.isfinite(v):
        return node
    return Const(v)


def _is(node: Node, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Node, b: Node) -> Node:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return _fold(BinOp("+", a, b))


def sub(a: Node, b: Node) -> Node:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return _fold(BinOp("-", a, b))


def mul(a: Node, b: Node) -> Node:
    if _is(a, 0.0) or _is(b, 0.0):
        return Const(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return _fold(BinOp("*", a, b))


def div(a: Node, b: Node) -> Node:
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return Const(0.0)
    return _fold(BinOp("/", a, b))


def power(a: Node, b: Node) -> Node:
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return Const(1.0)
    return _fold(BinOp("^", a, b))


def call(func: str, a: Node) -> Node:
    return _fold(Call(func, a))


# ------------------------------------------------------------------ differentiation


def _d(node: Node, var: str) -> Node:
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0)
    if isinstance(node, Neg):
        return neg(_d(node.arg, var))
    if isinstance(node, Call):
        a = node.arg
        da = _d(a, var)
        if _is(da, 0.0):
            return Const(0.0)
        f = node.func
        if f == "sin":
            outer = call("cos", a)
        elif f == "cos":
            outer = neg(call("sin", a))
        elif f == "tan":
            outer = div(Const(1.0), power(call("cos", a), Const(2.0)))
        elif f == "atan":
            outer = div(Const(1.0), add(Const(1.0), power(a, Const(2.0))))
        elif f == "exp":
            outer = node
        elif f == "log":
            outer = div(Const(1.0), a)
        elif f == "sqrt":
            outer = div(Const(1.0), mul(Const(2.0), node))
        elif f == "tanh":
            outer = sub(Const(1.0), power(node, Const(2.0)))
        elif f == "atanh":
            outer = div(Const(1.0), sub(Const(1.0), power(a, Const(2.0))))
        else:  # pragma: no cover
            raise TypeError(f"no derivative rule for {f}")
        return mul(outer, da)
    l, r = node.left, node.right
    dl, dr = _d(l, var), _d(r, var)
    op = node.op
    if op == "+":
        return add(dl, dr)
    if op == "-":
        return sub(dl, dr)
    if op == "*":
        return add(mul(dl, r), mul(l, dr))
    if op == "/":
        if _is_constant(r):
            return div(dl, r)
        return div(sub(mul(dl, r), mul(l, dr)), power(r, Const(2.0)))
    if op == "^":
        if _is_constant(r):
            # d(a^c) = c a^(c-1) a'
            return mul(mul(r, power(l, sub(r, Const(1.0)))), dl)
        if _is_constant(l):
            # d(c^b) = c^b log(c) b'
            return mul(mul(node, call("log", l)), dr)
        # d(a^b) = a^b (b' log a + b a'/a)
        return mul(node, add(mul(dr, call("log", l)), div(mul(r, dl), l)))
    raise TypeError(f"unknown node {node!r}")


def differentiate(e: Expression) -> Expression:
    """Symbolic derivative of ``e`` with respect to its free variable."""
    return Expression(_d(e.root, e.var), e.var)


# ---------------------------------------------------------------------- composition


def _subst(node: Node, var: str, repl: Node) -> Node:
    if isinstance(node, Var):
        return repl if node.name == var else node
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(_subst(node.arg, var, repl))
    if isinstance(node, Call):
        return Call(node.func, _subst(node.arg, var, repl))
    return BinOp(node.op, _subst(node.left, var, repl), _subst(node.right, var, repl))


def compose(outer: Expression, inner: Expression) -> Expression:
    """Return ``outer(inner(x))`` as an expression in ``inner``'s variable."""
    return Expression(_subst(outer.root, outer.var, inner.root), inner.var)


def variable(name: str) -> Expression:
    return Expression(Var(name), name)


def constant(value: float, name: str) -> Expression:
    return Expression(Const(float(value)), name)


def combine(op: str, a: Expression, b: Expression) -> Expression:
    """Binary combination of two expressions sharing one variable (with folding)."""
    if a.var != b.var:
        raise ValueError(f"variable mismatch: {a.var!r} vs {b.var!r}")
    ctor = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[op]
    return Expression(ctor(a.root, b.root), a.var)


# ------------------------------------------------------------------------ quadrature

# 15-point Kronrod extension of the 7-point Gauss rule (abscissae on [0, 1]).
_XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
_WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

def _gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float, float]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = f(c)
    fv1, fv2 = [], []
    res_k = fc * _WGK[7]
    res_g = fc * _WG[3]
    res_abs = abs(res_k)
    for j in range(7):
        dx = h * _XGK[j]
        f1 = f(c - dx)
        f2 = f(c + dx)
        fv1.append(f1)
        fv2.append(f2)
        res_k += _WGK[j] * (f1 + f2)
        res_abs += _WGK[j] * (abs(f1) + abs(f2))
        if j % 2 == 1:
            res_g += _WG[j // 2] * (f1 + f2)
    if math.isnan(res_k):
        raise QuadratureError(f"NaN encountered in integrand on [{a!r}, {b!r}]")
    mean = 0.5 * res_k
    res_asc = _WGK[7] * abs(fc - mean)
    for j in range(7):
        res_asc += _WGK[j] * (abs(fv1[j] - mean) + abs(fv2[j] - mean))
    res_k *= h
    res_asc *= abs(h)
    res_abs *= abs(h)
    err = abs(res_k - res_g * h)
    # QUADPACK error heuristic: |K15 - G7| is far too pessimistic on its own.
    if res_asc != 0.0 and err != 0.0:
        err = res_asc * min(1.0, (200.0 * err / res_asc) ** 1.5)
    if res_abs > _UFLOW / (50 * _EPS):
        err = max(50 * _EPS * res_abs, err)
    return res_k, err, res_abs


MAX_DEPTH = 50
MAX_INTERVALS = 20000
_EPS = 2.220446049250313e-16
_UFLOW = 2.2250738585072014e-308


def adaptive_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = MAX_DEPTH,
) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod (7, 15) quadrature.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``tol`` (or below the round-off floor of the result).

    Returns:
        ``(value, error_estimate)``.

    Raises:
        QuadratureError: a subinterval was bisected ``max_depth`` times, the
            interval budget ran out, or the integrand produced NaN.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0, 0.0
    if a > b:
        v, err = adaptive_quad(f, b, a, tol, max_depth)
        return -v, err

    val, err, rabs = _gk15(f, a, b)
    heap = [(-err, a, b, val, err, rabs, 0)]
    total, total_err, total_abs = val, err, rabs
    n = 1
    while True:
        floor = 50.0 * _EPS * total_abs
        if total_err <= max(tol, floor):
            return total, total_err
        neg_err, lo, hi, v, e, ra, depth = heapq.heappop(heap)
        if depth >= max_depth:
            raise QuadratureError(
                f"no convergence: subdivision cap {max_depth} reached on [{lo!r}, {hi!r}] "
                f"(error estimate {total_err:.3g} > tol {tol:.3g})"
            )
        if n >= MAX_INTERVALS:
            raise QuadratureError(f"no convergence within {MAX_INTERVALS} subintervals")
        mid = 0.5 * (lo + hi)
        v1, e1, r1 = _gk15(f, lo, mid)
        v2, e2, r2 = _gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 - e
        total_abs += r1 + r2 - ra
        heapq.heappush(heap, (-e1, lo, mid, v1, e1, r1, depth + 1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2, r2, depth + 1))
        n += 1
        # Re-sum occasionally so cancellation in the running totals cannot drift.
        if n % 64 == 0:
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(item[4] for item in heap)


def quad_integral(
    e: Union[Expression, Callable[[float], float]], a: float, b: float, tol: float = 1e-10
) -> float:
    """Definite integral of ``e`` over ``[a, b]`` with absolute error about ``tol``.

    ``quad_integral(e, b, a) == -quad_integral(e, a, b)`` and an empty interval
    gives exactly zero.
    """
    if a == b:
        return 0.0
    fn = e if not isinstance(e, Expression) else e.__call__
    return adaptive_quad(fn, float(a), float(b), tol)[0]
