"""Connections on the plane whose Christoffel symbols are ``a + b / x1``.

Index convention: ``(i, j, k)`` with 0-based entries stands for the symbol
Gamma_{ij}^k in ``nabla_{d_i} d_j = Gamma_{ij}^k d_k``. The JSON document uses
1-based keys ``"ijk"`` in the same order.

Constant symbols (all ``b = 0``) are Type A models; pure ``b / x1`` symbols
are Type B models on the half plane x1 > 0; anything else is "mixed".
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from . import expr as ex
from .errors import DomainError, NotTorsionFree, ParseError
from .exact import inverse

INDICES: Tuple[Tuple[int, int, int], ...] = tuple(itertools.product((0, 1), repeat=3))
KEYS = tuple(f"{i + 1}{j + 1}{k + 1}" for i, j, k in INDICES)

Pair = Tuple[Fraction, Fraction]


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("use exact rationals (int, Fraction or 'p/q' strings), not floats")
    return Fraction(x)


@dataclass(frozen=True)
class ChristoffelSpec:
    """Eight symbols Gamma_{ij}^k(x) = a + b / x1 with exact rational a, b.

    ``entries`` is ordered like :data:`INDICES` (111, 112, 121, ..., 222),
    which is also the order of the usual parameter vector xi_1..xi_8.
    """

    entries: Tuple[Pair, ...]

    def __post_init__(self):
        if len(self.entries) != 8:
            raise ValueError("a connection needs exactly 8 Christoffel symbols")
        object.__setattr__(
            self, "entries", tuple((_frac(a), _frac(b)) for a, b in self.entries)
        )

    # constructors -----------------------------------------------------------
    @classmethod
    def type_a(cls, *xi) -> "ChristoffelSpec":
        """Constant symbols xi_1..xi_8 (flattened 111, 112, ..., 222)."""
        xi = _flatten_xi(xi)
        return cls(tuple((x, 0) for x in xi))

    @classmethod
    def type_b(cls, *xi) -> "ChristoffelSpec":
        """Symbols xi_m / x1."""
        xi = _flatten_xi(xi)
        return cls(tuple((0, x) for x in xi))

    @classmethod
    def from_mapping(cls, gamma: Mapping[Tuple[int, int, int], Sequence]) -> "ChristoffelSpec":
        """Symbols keyed by 0-based (i, j, k); missing keys are zero."""
        return cls(tuple(tuple(gamma.get(idx, (0, 0))) for idx in INDICES))

    @classmethod
    def zero(cls) -> "ChristoffelSpec":
        return cls.type_a(*[0] * 8)

    # access ------------------------------------------------------------------
    def __getitem__(self, idx: Tuple[int, int, int]) -> Pair:
        i, j, k = idx
        return self.entries[4 * i + 2 * j + k]

    @property
    def kind(self) -> str:
        has_a = any(a for a, _ in self.entries)
        has_b = any(b for _, b in self.entries)
        if not has_b:
            return "A"
        if not has_a:
            return "B"
        return "mixed"

    @property
    def constant_part(self) -> Tuple[Fraction, ...]:
        return tuple(a for a, _ in self.entries)

    @property
    def inverse_x1_part(self) -> Tuple[Fraction, ...]:
        return tuple(b for _, b in self.entries)

    def gamma_expr(self, i: int, j: int, k: int) -> ex.Expr:
        a, b = self[i, j, k]
        return ex.add(ex.Const(a), ex.mul(ex.Const(b), ex.power(ex.X1, ex.MINUS_ONE)))

    def dgamma_expr(self, l: int, i: int, j: int, k: int) -> ex.Expr:
        """d_l Gamma_{ij}^k; only the 1/x1 part depends on x1."""
        if l == 1:
            return ex.ZERO
        _, b = self[i, j, k]
        return ex.mul(ex.Const(-b), ex.power(ex.X1, ex.Const(-2)))

    def map(self, fn) -> "ChristoffelSpec":
        return ChristoffelSpec(tuple(fn(idx, self[idx]) for idx in INDICES))

    def __add__(self, other: "ChristoffelSpec") -> "ChristoffelSpec":
        return ChristoffelSpec(
            tuple((a1 + a2, b1 + b2) for (a1, b1), (a2, b2) in zip(self.entries, other.entries))
        )

    def scale(self, factor) -> "ChristoffelSpec":
        f = _frac(factor)
        return ChristoffelSpec(tuple((a * f, b * f) for a, b in self.entries))

    # serialisation ------------------------------------------------------------
    def to_json(self) -> Dict:
        return {
            "entries": {
                key: [_fmt(a), _fmt(b)] for key, (a, b) in zip(KEYS, self.entries)
            }
        }

    @classmethod
    def from_json(cls, doc) -> "ChristoffelSpec":
        if isinstance(doc, (str, bytes)):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("entries"), dict):
            raise ParseError('connection document needs an "entries" object')
        entries = doc["entries"]
        missing = [k for k in KEYS if k not in entries]
        extra = [k for k in entries if k not in KEYS]
        if missing or extra:
            raise ParseError(f"bad entry keys: missing {missing}, unexpected {extra}")
        pairs = []
        for key in KEYS:
            val = entries[key]
            if not isinstance(val, list) or len(val) != 2:
                raise ParseError(f"entry {key} must be a pair [a, b]")
            pairs.append((parse_rational(val[0]), parse_rational(val[1])))
        return cls(tuple(pairs))


def _flatten_xi(xi) -> Tuple[Fraction, ...]:
    if len(xi) == 1 and not isinstance(xi[0], (int, Fraction, str)):
        xi = tuple(xi[0])
    flat = np.asarray(xi, dtype=object).ravel().tolist()
    if len(flat) != 8:
        raise ValueError("expected 8 symbols")
    return tuple(parse_rational(x) if isinstance(x, str) else _frac(x) for x in flat)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


format_rational = _fmt


def parse_rational(value) -> Fraction:
    """Read ``"p/q"``, ``"p"`` or an int as an exact rational."""
    if isinstance(value, bool):
        raise ParseError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            num, _, den = text.partition("/")
            q = Fraction(int(num), int(den)) if den else Fraction(int(num))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"not a rational: {value!r}") from None
        return q
    raise ParseError(f"rationals must be 'p/q' strings, got {value!r}")


# ------------------------------------------------------------------- torsion

@dataclass(frozen=True)
class TorsionVector:
    """T^i = (Gamma_{12}^i - Gamma_{21}^i) / 2, each as (constant, 1/x1) parts."""

    T1: Pair = (Fraction(0), Fraction(0))
    T2: Pair = (Fraction(0), Fraction(0))

    def __post_init__(self):
        for name in ("T1", "T2"):
            a, b = getattr(self, name)
            object.__setattr__(self, name, (_frac(a), _frac(b)))

    @classmethod
    def constant(cls, t1, t2) -> "TorsionVector":
        return cls((t1, 0), (t2, 0))

    @classmethod
    def inverse_x1(cls, t1, t2) -> "TorsionVector":
        return cls((0, t1), (0, t2))

    def __getitem__(self, k: int) -> Pair:
        return (self.T1, self.T2)[k]

    def is_zero(self) -> bool:
        return self.T1 == (0, 0) and self.T2 == (0, 0)


def torsion(s: ChristoffelSpec) -> TorsionVector:
    parts = []
    for k in (0, 1):
        (a12, b12), (a21, b21) = s[0, 1, k], s[1, 0, k]
        parts.append(((a12 - a21) / 2, (b12 - b21) / 2))
    return TorsionVector(*parts)


def symmetrize(s: ChristoffelSpec) -> ChristoffelSpec:
    """The torsion-free connection with symbols (Gamma_ij^k + Gamma_ji^k) / 2."""

    def sym(idx, _):
        i, j, k = idx
        (a1, b1), (a2, b2) = s[i, j, k], s[j, i, k]
        return ((a1 + a2) / 2, (b1 + b2) / 2)

    return s.map(sym)


def perturb(s0: ChristoffelSpec, t: TorsionVector) -> ChristoffelSpec:
    """Add torsion ``t`` to a torsion-free connection.

    Diagonal symbols are copied, Gamma_12^k gains +T^k and Gamma_21^k becomes
    Gamma_12^k - T^k.
    """
    if not torsion(s0).is_zero():
        raise NotTorsionFree("perturb() needs a torsion-free connection")

    def shift(idx, pair):
        i, j, k = idx
        if i == j:
            return pair
        a, b = s0[0, 1, k]
        ta, tb = t[k]
        sign = 1 if (i, j) == (0, 1) else -1
        return (a + sign * ta, b + sign * tb)

    return s0.map(shift)


# -------------------------------------------------------- pointwise tensors

def _point(p) -> Tuple[Fraction, Fraction]:
    x1, x2 = p
    return _frac(x1), _frac(x2)


def _check_domain(s: ChristoffelSpec, x1: Fraction):
    if x1 == 0 and any(s.inverse_x1_part):
        raise DomainError("symbols with a 1/x1 part are undefined at x1 = 0")


def christoffel_at(s: ChristoffelSpec, p) -> np.ndarray:
    """Exact symbols at ``p`` as a (2, 2, 2) object array indexed [i, j, k]."""
    x1, _ = _point(p)
    _check_domain(s, x1)
    out = np.empty((2, 2, 2), dtype=object)
    for idx in INDICES:
        a, b = s[idx]
        out[idx] = a + (b / x1 if b else 0)
    return out


def christoffel_derivative_at(s: ChristoffelSpec, p) -> np.ndarray:
    """d_l Gamma_{ij}^k at ``p`` as a (2, 2, 2, 2) array indexed [l, i, j, k]."""
    x1, _ = _point(p)
    _check_domain(s, x1)
    out = np.zeros((2, 2, 2, 2), dtype=object)
    out[...] = Fraction(0)
    for idx in INDICES:
        _, b = s[idx]
        out[(0,) + idx] = -b / x1 ** 2 if b else Fraction(0)
    return out


def curvature_at(s: ChristoffelSpec, p) -> np.ndarray:
    """Curvature R^l_{kij} at ``p`` as a (2, 2, 2, 2) array indexed [l, k, i, j].

    R^l_{kij} = d_i Gamma_{jk}^l - d_j Gamma_{ik}^l
                + Gamma_{im}^l Gamma_{jk}^m - Gamma_{jm}^l Gamma_{ik}^m
    """
    g = christoffel_at(s, p)
    dg = christoffel_derivative_at(s, p)
    r = np.empty((2, 2, 2, 2), dtype=object)
    for l, k, i, j in itertools.product((0, 1), repeat=4):
        val = dg[i, j, k, l] - dg[j, i, k, l]
        for m in (0, 1):
            val += g[i, m, l] * g[j, k, m] - g[j, m, l] * g[i, k, m]
        r[l, k, i, j] = Fraction(val)
    return r


# --------------------------------------------------------- structure groups

def linear_change(s: ChristoffelSpec, p: Sequence[Sequence]) -> ChristoffelSpec:
    """Pull back along the linear coordinate change x = P y.

    For an invertible rational 2x2 matrix ``P`` the new symbols are
    Gamma'_{ij}^k = (P^-1)^k_c Gamma_{ab}^c P^a_i P^b_j, evaluated at the same
    point. Constant symbols stay constant (the general linear group acting on
    Type A models). When P fixes the first coordinate (x1 = y1) the 1/x1 part
    keeps its form, which is the shear action on Type B models.
    """
    p = [[_frac(x) for x in row] for row in p]
    has_b = any(s.inverse_x1_part)
    if has_b and (p[0][1] != 0 or p[0][0] <= 0):
        raise ValueError("symbols with a 1/x1 part need x1 = p00 * y1 with p00 > 0")
    pinv = inverse(p)
    # 1/x1 = 1/(p00 y1)
    b_scale = 1 / p[0][0] if has_b else Fraction(1)
    new = {}
    for i, j, k in INDICES:
        a_new = Fraction(0)
        b_new = Fraction(0)
        for a_, b_, c_ in INDICES:
            w = pinv[k][c_] * p[a_][i] * p[b_][j]
            if w:
                ga, gb = s[a_, b_, c_]
                a_new += w * ga
                b_new += w * gb * b_scale
        new[i, j, k] = (a_new, b_new)
    return ChristoffelSpec.from_mapping(new)


def shear(s: ChristoffelSpec, a, b) -> ChristoffelSpec:
    """Shear (x1, x2) -> (x1, b x1 + a x2) acting on a Type B model."""
    return linear_change(s, [[1, 0], [b, a]])


def random_spec(rng: np.random.Generator, kind: str = "A", size: int = 9, den: int = 7) -> ChristoffelSpec:
    """Random rational symbols with numerators in [-size, size] and
    denominators in [1, den]."""
    vals = [Fraction(int(rng.integers(-size, size + 1)), int(rng.integers(1, den + 1))) for _ in range(16)]
    if kind == "A":
        return ChristoffelSpec(tuple((vals[m], 0) for m in range(8)))
    if kind == "B":
        return ChristoffelSpec(tuple((0, vals[m]) for m in range(8)))
    return ChristoffelSpec(tuple((vals[m], vals[m + 8]) for m in range(8)))


def iter_components(s: ChristoffelSpec) -> Iterable[Tuple[Tuple[int, int, int], Pair]]:
    return zip(INDICES, s.entries)
