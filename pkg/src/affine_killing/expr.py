"""Small symbolic expression engine over the coordinates x1, x2.

Expressions are immutable trees. The module-level constructors (``add``,
``mul``, ``power``, ``exp``...) return canonical trees: nested sums and
products are flattened, rational constants are folded, repeated factors with
rational exponents are merged, and a product containing 0 collapses to 0.
There is no simplifier beyond that; equality of functions is decided by
:func:`is_identically_zero`.

Parameters (``c``, ``kappa``, ``T1``...) are opaque symbols bound to exact
rationals at evaluation time.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, ParseError, UnboundParam
from .poly import Laurent

Number = Union[int, Fraction]
Params = Mapping[str, Number]

VARIABLES = ("x1", "x2")
FUNCTIONS = ("exp", "log", "sin", "cos")

# default zero test: 20 seeded points in [1/2, 2] x [-1, 1]
ZERO_TEST_POINTS = 20
ZERO_TEST_SEED = 271828
ZERO_TEST_TOL = 1e-9
SAMPLE_BOX = ((0.5, 2.0), (-1.0, 1.0))


class Expr:
    """Base class; supports ``+ - * / **`` with numbers and other expressions."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, as_expr(exponent))

    def diff(self, var: str) -> "Expr":
        return differentiate(self, var)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if type(self.value) is not Fraction:
            object.__setattr__(self, "value", Fraction(self.value))

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True, repr=False)
class Param(Expr):
    name: str

    def __repr__(self):
        return f"Param({self.name!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")

    def __repr__(self):
        return self.name


@dataclass(frozen=True, repr=False)
class Sum(Expr):
    terms: Tuple[Expr, ...]

    def __repr__(self):
        return "Sum(" + ", ".join(map(repr, self.terms)) + ")"


@dataclass(frozen=True, repr=False)
class Product(Expr):
    factors: Tuple[Expr, ...]

    def __repr__(self):
        return "Product(" + ", ".join(map(repr, self.factors)) + ")"


@dataclass(frozen=True, repr=False)
class Power(Expr):
    base: Expr
    exponent: Expr  # free of x1, x2: a Const or an expression in parameters

    def __repr__(self):
        return f"Power({self.base!r}, {self.exponent!r})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __repr__(self):
        return f"{self.name}({self.arg!r})"


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))
X1 = Var("x1")
X2 = Var("x2")


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, str):
        return parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value) -> Const:
    return Const(Fraction(value))


# ---------------------------------------------------------------- constructors

def add(*terms: Expr) -> Expr:
    flat = []
    total = Fraction(0)
    for t in terms:
        for u in (t.terms if isinstance(t, Sum) else (t,)):
            if isinstance(u, Const):
                total += u.value
            else:
                flat.append(u)
    if total:
        flat.insert(0, Const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors: Expr) -> Expr:
    coef = Fraction(1)
    slots: list = []  # [base, rational exponent] or [factor, None]
    index: Dict[Expr, int] = {}
    stack = list(reversed(factors))
    while stack:
        f = stack.pop()
        if isinstance(f, Product):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Const):
            coef *= f.value
            continue
        if isinstance(f, Power) and not isinstance(f.exponent, Const):
            slots.append([f, None])
            continue
        if isinstance(f, Power):
            base, e = f.base, f.exponent.value
        else:
            base, e = f, Fraction(1)
        if base in index:
            slots[index[base]][1] += e
        else:
            index[base] = len(slots)
            slots.append([base, e])
    if coef == 0:
        return ZERO
    out = []
    again = False
    for base, e in slots:
        item = base if e is None else power(base, Const(e))
        again = again or isinstance(item, (Const, Product))
        out.append(item)
    if again:
        return mul(Const(coef), *out)
    if coef != 1:
        out.insert(0, Const(coef))
    if not out:
        return Const(coef)
    if len(out) == 1:
        return out[0]
    return Product(tuple(out))


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def power(base: Expr, exponent: Expr) -> Expr:
    exponent = as_expr(exponent)
    if depends_on(exponent, "x1") or depends_on(exponent, "x2"):
        raise ValueError("exponents may depend on parameters only")
    if isinstance(exponent, Const):
        q = exponent.value
        if q == 0:
            return ONE
        if q == 1:
            return base
        if isinstance(base, Const):
            if base.value == 1:
                return ONE
            if q.denominator == 1 and not (base.value == 0 and q < 0):
                return Const(base.value ** int(q))
    return Power(base, exponent)


def exp(arg) -> Expr:
    arg = as_expr(arg)
    return ONE if arg == ZERO else Func("exp", arg)


def log(arg) -> Expr:
    arg = as_expr(arg)
    return ZERO if arg == ONE else Func("log", arg)


def sin(arg) -> Expr:
    arg = as_expr(arg)
    return ZERO if arg == ZERO else Func("sin", arg)


def cos(arg) -> Expr:
    arg = as_expr(arg)
    return ONE if arg == ZERO else Func("cos", arg)


_FUNC_BUILDERS = {"exp": exp, "log": log, "sin": sin, "cos": cos}


def canonical(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonicalising constructors."""
    if isinstance(e, (Const, Param, Var)):
        return e
    if isinstance(e, Sum):
        return add(*(canonical(t) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(canonical(f) for f in e.factors))
    if isinstance(e, Power):
        return power(canonical(e.base), canonical(e.exponent))
    if isinstance(e, Func):
        return _FUNC_BUILDERS[e.name](canonical(e.arg))
    raise TypeError(e)


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Power):
        return (e.base, e.exponent)
    if isinstance(e, Func):
        return (e.arg,)
    return ()


def depends_on(e: Expr, var: str) -> bool:
    if isinstance(e, Var):
        return e.name == var
    return any(depends_on(c, var) for c in children(e))


def free_params(e: Expr) -> set:
    if isinstance(e, Param):
        return {e.name}
    out = set()
    for c in children(e):
        out |= free_params(c)
    return out


def substitute(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Replace parameters by expressions (numbers are accepted too)."""
    if isinstance(e, Param):
        return as_expr(bindings[e.name]) if e.name in bindings else e
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return add(*(substitute(t, bindings) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(substitute(f, bindings) for f in e.factors))
    if isinstance(e, Power):
        return power(substitute(e.base, bindings), substitute(e.exponent, bindings))
    return _FUNC_BUILDERS[e.name](substitute(e.arg, bindings))


# ------------------------------------------------------------- differentiation

def differentiate(e: Expr, var: str) -> Expr:
    """Partial derivative with respect to ``"x1"`` or ``"x2"``."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return _diff(e, var)


def _diff(e: Expr, var: str) -> Expr:
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Sum):
        return add(*(_diff(t, var) for t in e.terms))
    if isinstance(e, Product):
        fs = e.factors
        return add(*(mul(*fs[:i], _diff(f, var), *fs[i + 1:]) for i, f in enumerate(fs)))
    if isinstance(e, Power):
        du = _diff(e.base, var)
        if du == ZERO:
            return ZERO
        return mul(e.exponent, power(e.base, add(e.exponent, MINUS_ONE)), du)
    du = _diff(e.arg, var)
    if du == ZERO:
        return ZERO
    if e.name == "exp":
        return mul(e, du)
    if e.name == "log":
        return mul(du, power(e.arg, MINUS_ONE))
    if e.name == "sin":
        return mul(cos(e.arg), du)
    return mul(MINUS_ONE, sin(e.arg), du)


# ------------------------------------------------------------------ evaluation

def _param_value(name: str, params: Optional[Params]) -> Fraction:
    if params is None or name not in params:
        raise UnboundParam(name)
    return Fraction(params[name])


def evaluate(e: Expr, x1=0, x2=0, params: Optional[Params] = None):
    """Value of ``e`` at a point.

    Rational subtrees are computed exactly and returned as ``Fraction``; the
    result becomes a float only once a transcendental or irrational node is
    involved. Pass coordinates as ints/Fractions to keep the exact path.
    """
    x1 = Fraction(x1) if not isinstance(x1, float) else x1
    x2 = Fraction(x2) if not isinstance(x2, float) else x2
    return _eval(e, x1, x2, params, {})


def _eval(e, x1, x2, params, memo):
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        val = e.value
    elif isinstance(e, Param):
        val = _param_value(e.name, params)
    elif isinstance(e, Var):
        val = x1 if e.name == "x1" else x2
    elif isinstance(e, Sum):
        val = sum((_eval(t, x1, x2, params, memo) for t in e.terms), Fraction(0))
    elif isinstance(e, Product):
        val = Fraction(1)
        for f in e.factors:
            val = val * _eval(f, x1, x2, params, memo)
    elif isinstance(e, Power):
        b = _eval(e.base, x1, x2, params, memo)
        q = _eval(e.exponent, x1, x2, params, memo)
        if isinstance(q, Fraction) and q.denominator == 1:
            if b == 0 and q < 0:
                raise DomainError("division by zero")
            val = b ** int(q)
        else:
            if b <= 0:
                raise DomainError(f"fractional power of non-positive base {b}")
            val = float(b) ** float(q)
    else:
        a = _eval(e.arg, x1, x2, params, memo)
        if e.name == "log":
            if a <= 0:
                raise DomainError(f"log of non-positive argument {a}")
            val = math.log(a)
        else:
            val = getattr(math, e.name)(a)
    memo[key] = val
    return val


def evaluate_array(e: Expr, x1: np.ndarray, x2: np.ndarray, params: Optional[Params] = None) -> np.ndarray:
    """Vectorised float evaluation at many points."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = _eval_np(e, x1, x2, params, {})
    return np.broadcast_to(np.asarray(out, dtype=float), x1.shape)


def _eval_np(e, x1, x2, params, memo):
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        val = float(e.value)
    elif isinstance(e, Param):
        val = float(_param_value(e.name, params))
    elif isinstance(e, Var):
        val = x1 if e.name == "x1" else x2
    elif isinstance(e, Sum):
        val = 0.0
        for t in e.terms:
            val = val + _eval_np(t, x1, x2, params, memo)
    elif isinstance(e, Product):
        val = 1.0
        for f in e.factors:
            val = val * _eval_np(f, x1, x2, params, memo)
    elif isinstance(e, Power):
        b = _eval_np(e.base, x1, x2, params, memo)
        q = _exact_exponent(e.exponent, params)
        if q.denominator == 1:
            if q < 0 and np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            val = np.power(b, int(q)) if q >= 0 else 1.0 / np.power(b, -int(q))
        else:
            if np.any(np.asarray(b) <= 0):
                raise DomainError("fractional power of non-positive base")
            val = np.power(b, float(q))
    else:
        a = _eval_np(e.arg, x1, x2, params, memo)
        if e.name == "log":
            if np.any(np.asarray(a) <= 0):
                raise DomainError("log of non-positive argument")
            val = np.log(a)
        else:
            val = getattr(np, e.name)(a)
    memo[key] = val
    return val


def _exact_exponent(e: Expr, params) -> Fraction:
    val = _eval(e, Fraction(0), Fraction(0), params, {})
    if not isinstance(val, Fraction):
        raise DomainError("exponent does not evaluate to a rational")
    return val


# ----------------------------------------------------------------- zero tests

def sample_points(n: int = ZERO_TEST_POINTS, seed: int = ZERO_TEST_SEED, box=SAMPLE_BOX):
    """Deterministic points (x1, x2) drawn uniformly from ``box``."""
    rng = np.random.default_rng(seed)
    (a1, b1), (a2, b2) = box
    return rng.uniform(a1, b1, n), rng.uniform(a2, b2, n)


def to_laurent(e: Expr, params: Optional[Params] = None) -> Optional[Laurent]:
    """Exact Laurent polynomial for ``e`` if it is one, else None."""
    try:
        return _laurent(e, params)
    except _NotPolynomial:
        return None


class _NotPolynomial(Exception):
    pass


def _laurent(e, params) -> Laurent:
    if isinstance(e, Const):
        return Laurent.const(e.value)
    if isinstance(e, Param):
        return Laurent.const(_param_value(e.name, params))
    if isinstance(e, Var):
        return Laurent.monomial(1, 0) if e.name == "x1" else Laurent.monomial(0, 1)
    if isinstance(e, Sum):
        out = Laurent()
        for t in e.terms:
            out = out + _laurent(t, params)
        return out
    if isinstance(e, Product):
        out = Laurent.const(1)
        for f in e.factors:
            out = out * _laurent(f, params)
        return out
    if isinstance(e, Power):
        q = _exact_exponent(e.exponent, params)
        if q.denominator != 1:
            raise _NotPolynomial
        base = _laurent(e.base, params)
        if q < 0 and len(base.terms) != 1:
            raise _NotPolynomial
        return base ** int(q)
    raise _NotPolynomial


def is_identically_zero(
    e: Expr,
    params: Optional[Params] = None,
    points=None,
    tol: float = ZERO_TEST_TOL,
) -> bool:
    """Decide whether ``e`` vanishes on the sample domain.

    Laurent polynomials in x1, x2 are decided exactly by their coefficients.
    Anything else is evaluated at ``points`` (default: 20 seeded points in
    [1/2, 2] x [-1, 1]) and compared against ``tol``.
    """
    poly = to_laurent(e, params)
    if poly is not None:
        return poly.is_zero()
    if points is None:
        points = sample_points()
    values = evaluate_array(e, points[0], points[1], params)
    return bool(np.all(np.abs(values) <= tol))


# --------------------------------------------------------------- text format

_BINOPS: Dict[type, Callable[[Expr, Expr], Expr]] = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: power(a, b),
}


def parse(text: str) -> Expr:
    """Parse infix text: ``+ - * / ^ **``, ``exp log sin cos``, ``pow(b, p)``.

    Names ``x1`` and ``x2`` are coordinates; any other identifier is a
    parameter. Numbers must be integers; write rationals as ``p/q``.
    """
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    return _from_ast(tree.body, text)


def _from_ast(node, text) -> Expr:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ParseError(f"only integer literals are allowed in {text!r}")
        return Const(Fraction(node.value))
    if isinstance(node, ast.Name):
        if node.id in VARIABLES:
            return Var(node.id)
        if node.id in FUNCTIONS or node.id == "pow":
            raise ParseError(f"{node.id} used without arguments in {text!r}")
        return Param(node.id)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _from_ast(node.operand, text)
        return neg(inner) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left = _from_ast(node.left, text)
        right = _from_ast(node.right, text)
        try:
            return _BINOPS[type(node.op)](left, right)
        except ValueError as exc:
            raise ParseError(f"{exc} in {text!r}") from None
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        args = [_from_ast(a, text) for a in node.args]
        name = node.func.id
        if name in FUNCTIONS and len(args) == 1:
            return _FUNC_BUILDERS[name](args[0])
        if name == "pow" and len(args) == 2:
            try:
                return power(args[0], args[1])
            except ValueError as exc:
                raise ParseError(f"{exc} in {text!r}") from None
    raise ParseError(f"unsupported syntax in {text!r}")


def _fmt_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_text(e: Expr) -> str:
    """Infix text accepted by :func:`parse`."""
    if isinstance(e, Const):
        return _fmt_fraction(e.value)
    if isinstance(e, (Param, Var)):
        return e.name
    if isinstance(e, Sum):
        out = to_text(e.terms[0])
        for t in e.terms[1:]:
            s = to_text(t)
            out += " - " + s[1:] if s.startswith("-") else " + " + s
        return out
    if isinstance(e, Product):
        parts = []
        fs = list(e.factors)
        sign = ""
        if isinstance(fs[0], Const) and fs[0].value == -1:
            sign = "-"
            fs = fs[1:]
        for f in fs:
            s = to_text(f)
            if isinstance(f, Sum) or (isinstance(f, Const) and (f.value < 0 or f.value.denominator != 1)):
                s = f"({s})"
            parts.append(s)
        return sign + "*".join(parts)
    if isinstance(e, Power):
        return f"pow({to_text(e.base)}, {to_text(e.exponent)})"
    return f"{e.name}({to_text(e.arg)})"


def walk(e: Expr) -> Iterable[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)
