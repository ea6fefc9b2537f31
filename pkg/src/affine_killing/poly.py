"""Laurent polynomials in x1, x2 with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Tuple

Monomial = Tuple[int, int]


class Laurent:
    """Finite sum of ``coef * x1**a * x2**b`` with integer ``a, b``.

    Immutable in practice: arithmetic always returns new instances.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Monomial, Fraction] | None = None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, value) -> "Laurent":
        return cls({(0, 0): Fraction(value)})

    @classmethod
    def monomial(cls, a: int, b: int = 0, coef=1) -> "Laurent":
        return cls({(a, b): Fraction(coef)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(m == (0, 0) for m in self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Laurent):
            other = Laurent.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "Laurent":
        if not isinstance(other, Laurent):
            try:
                other = Laurent.const(other)
            except TypeError:
                return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Laurent(out)

    __radd__ = __add__

    def __neg__(self) -> "Laurent":
        return Laurent({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Laurent":
        if not isinstance(other, Laurent):
            other = Laurent.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Laurent":
        return (-self) + other

    def __mul__(self, other) -> "Laurent":
        if not isinstance(other, Laurent):
            try:
                other = Fraction(other)
            except TypeError:
                return NotImplemented
            return Laurent({m: c * other for m, c in self.terms.items()})
        out: Dict[Monomial, Fraction] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                m = (a1 + a2, b1 + b2)
                out[m] = out.get(m, 0) + c1 * c2
        return Laurent(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Laurent":
        if n < 0:
            if len(self.terms) != 1:
                raise ValueError("only monomials can be inverted")
            ((a, b), c), = self.terms.items()
            return Laurent({(a * n, b * n): c ** n})
        out = Laurent.const(1)
        for _ in range(n):
            out = out * self
        return out

    def diff(self, var: int) -> "Laurent":
        """Partial derivative; ``var`` is 0 for x1 and 1 for x2."""
        out = {}
        for (a, b), c in self.terms.items():
            e = (a, b)[var]
            if e:
                m = (a - 1, b) if var == 0 else (a, b - 1)
                out[m] = c * e
        return Laurent(out)

    def __call__(self, x1, x2=0):
        x1 = Fraction(x1)
        x2 = Fraction(x2)
        total = Fraction(0)
        for (a, b), c in self.terms.items():
            if (a < 0 and x1 == 0) or (b < 0 and x2 == 0):
                from .errors import DomainError

                raise DomainError("negative power of zero coordinate")
            total += c * x1 ** a * x2 ** b
        return total

    def coefficients(self) -> Iterable[Tuple[Monomial, Fraction]]:
        return sorted(self.terms.items())

    def __repr__(self) -> str:
        if not self.terms:
            return "Laurent(0)"
        parts = [f"{c}*x1^{a}*x2^{b}" for (a, b), c in self.coefficients()]
        return "Laurent(" + " + ".join(parts) + ")"
